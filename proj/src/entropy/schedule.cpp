#include "dlf/entropy/schedule.hpp"

#include "dlf/error.hpp"

namespace dlf::entropy {

int group_of(int y, int x) {
    for (int g = 0; g < kGroupCount; ++g)
        if (kGroupPattern[g][0] == (y & 1) && kGroupPattern[g][1] == (x & 1)) return g;
    return -1;  // unreachable
}

std::size_t CodingSchedule::total() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
}

CodingSchedule quadtree_schedule(int channels, int h2, int w2) {
    require(channels >= 1 && h2 >= 1 && w2 >= 1, ErrorKind::invalid_input, "schedule dims must be >= 1");
    CodingSchedule s;
    s.channels = channels;
    s.height = h2;
    s.width = w2;
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x) s.groups[static_cast<std::size_t>(group_of(y, x))].push_back({c, y, x});
    return s;
}

}  // namespace dlf::entropy
