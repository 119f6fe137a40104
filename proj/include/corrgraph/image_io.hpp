#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "corrgraph/errors.hpp"

namespace corrgraph {

// IDX container magics, big-endian on disk.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Square 8-bit grayscale image, row-major.
struct RawImage {
    int side = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * side + col];
    }
};

// Intensities scaled to [0,1].
struct Image {
    Eigen::MatrixXd pixels;

    int side() const { return static_cast<int>(pixels.rows()); }
};

enum class Split : std::uint8_t { train = 0, test = 1 };

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    Split split = Split::train;

    std::size_t size() const { return images.size(); }
};

// IDX image file -> images. Rejects non-square shapes: everything downstream
// assumes a single side length N.
std::vector<RawImage> parse_idx_images(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

// Inverse of the parsers; all images must share one side length.
std::vector<std::uint8_t> encode_idx_images(const std::vector<RawImage>& images);
std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels);

// Fixed global scale: pixel / 255.
Image normalize(const RawImage& raw);

// Reads and pairs an IDX image file with its label file. Labels are checked
// to lie in 0..9.
LabeledDataset load_labeled(const std::filesystem::path& images_path,
                            const std::filesystem::path& labels_path, Split split);

// Draws exactly per_class items of each class 0..9. Selection depends only on
// (dataset order, per_class, seed); output keeps the original relative order.
LabeledDataset stratified_subset(const LabeledDataset& ds, int per_class,
                                 std::uint64_t seed);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

} // namespace corrgraph
