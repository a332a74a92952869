#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dlf::entropy {

inline constexpr int kGroupCount = 4;

// (y mod 2, x mod 2) pattern coded by each group, in coding order.
inline constexpr std::array<std::array<int, 2>, kGroupCount> kGroupPattern = {{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};

struct Position {
    int channel = 0;
    int y = 0;
    int x = 0;
    bool operator==(const Position&) const = default;
};

// Four disjoint groups covering every (channel, y, x) of a channels x h2 x w2
// grid. Within a group positions are ordered channel-major, then row, then
// column; that order is also the bitstream order.
struct CodingSchedule {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::array<std::vector<Position>, kGroupCount> groups;

    std::size_t total() const;
};

int group_of(int y, int x);

CodingSchedule quadtree_schedule(int channels, int h2, int w2);

}  // namespace dlf::entropy
