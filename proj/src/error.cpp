#include "dlf/error.hpp"

namespace dlf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid input";
        case ErrorKind::shape: return "shape error";
        case ErrorKind::format: return "format error";
        case ErrorKind::length: return "length error";
        case ErrorKind::version: return "version error";
        case ErrorKind::causality: return "causality error";
        case ErrorKind::checkpoint_mismatch: return "checkpoint mismatch";
        case ErrorKind::config: return "config error";
        case ErrorKind::io: return "io error";
    }
    return "error";
}

}  // namespace dlf
