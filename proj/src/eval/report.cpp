#include "dlf/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "dlf/error.hpp"
#include "dlf/io/image.hpp"

namespace dlf::eval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

std::string rd_curves_to_csv(const std::vector<RDCurve>& curves) {
    std::set<std::string> names;
    for (const auto& c : curves)
        for (const auto& p : c.points)
            for (const auto& [k, v] : p.metrics) names.insert(k);
    std::ostringstream out;
    out << "label,bpp";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (const auto& c : curves) {
        require(c.label.find(',') == std::string::npos, ErrorKind::invalid_input, "curve label contains a comma");
        for (const auto& p : c.points) {
            out << c.label << ',' << format_double(p.bpp);
            for (const auto& n : names) {
                out << ',';
                if (auto it = p.metrics.find(n); it != p.metrics.end()) out << format_double(it->second);
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<RDCurve> rd_curves_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::format, "empty rd csv");
    const auto header = split_csv_line(line);
    require(header.size() >= 2 && header[0] == "label" && header[1] == "bpp", ErrorKind::format,
            "rd csv header must start with label,bpp");
    std::vector<RDCurve> curves;
    std::map<std::string, std::size_t> by_label;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        require(cells.size() == header.size(), ErrorKind::format, "rd csv row has wrong column count");
        auto [it, inserted] = by_label.emplace(cells[0], curves.size());
        if (inserted) curves.push_back(RDCurve{cells[0], {}});
        RDPoint p;
        p.bpp = std::stod(cells[1]);
        for (std::size_t i = 2; i < cells.size(); ++i)
            if (!cells[i].empty()) p.metrics[header[i]] = std::stod(cells[i]);
        curves[it->second].points.push_back(std::move(p));
    }
    return curves;
}

void write_rd_csv(const std::filesystem::path& path, const std::vector<RDCurve>& curves) {
    const auto text = rd_curves_to_csv(curves);
    io::write_file_atomic(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::vector<RDCurve> read_rd_csv(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    return rd_curves_from_csv(std::string(bytes.begin(), bytes.end()));
}

std::string bd_rate_table(const RDCurve& anchor, const std::vector<RDCurve>& curves,
                          const std::vector<std::string>& metrics) {
    std::ostringstream out;
    out << "| Variant |";
    for (const auto& m : metrics) out << ' ' << m << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& c : curves) {
        out << "| " << c.label << " |";
        for (const auto& m : metrics) {
            try {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.2f%%", bd_rate(anchor, c, m));
                out << ' ' << buf << " |";
            } catch (const Error&) {
                out << " n/a |";
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace dlf::eval
