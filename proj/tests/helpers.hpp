#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "corrgraph/image_io.hpp"
#include "corrgraph/rng.hpp"

namespace testutil {

inline corrgraph::Image random_image(int side, corrgraph::Rng& rng) {
    corrgraph::Image img;
    img.pixels.resize(side, side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) img.pixels(r, c) = rng.unit();
    return img;
}

inline corrgraph::RawImage random_raw(int side, corrgraph::Rng& rng) {
    corrgraph::RawImage img;
    img.side = side;
    img.pixels.resize(std::size_t(side) * side);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Per-process scratch directory; suites share the process so a tag keeps
// suites from clobbering each other's fixtures.
inline std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() /
             ("corrgraph_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
    return p;
}

} // namespace testutil
