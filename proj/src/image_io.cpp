#include "corrgraph/image_io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "corrgraph/rng.hpp"

namespace corrgraph {

namespace {

std::uint32_t read_be_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void append_be_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

} // namespace

std::vector<RawImage> parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) throw Truncated("IDX image file shorter than its header");
    if (read_be_u32(bytes, 0) != kIdxImageMagic)
        throw BadMagic("not an IDX image file");
    const std::uint64_t count = read_be_u32(bytes, 4);
    const std::uint32_t rows = read_be_u32(bytes, 8);
    const std::uint32_t cols = read_be_u32(bytes, 12);
    if (rows != cols)
        throw NonSquare("IDX images are " + std::to_string(rows) + "x" +
                        std::to_string(cols) + "; only square images are supported");
    if (rows < 2) throw InputError("image side must be at least 2");
    const std::uint64_t pixels_per_image = std::uint64_t(rows) * cols;
    if (bytes.size() - 16 < count * pixels_per_image)
        throw Truncated("IDX image file declares " + std::to_string(count) +
                        " images but the payload is too short");

    std::vector<RawImage> images(count);
    const std::uint8_t* p = bytes.data() + 16;
    for (std::uint64_t k = 0; k < count; ++k) {
        images[k].side = static_cast<int>(rows);
        images[k].pixels.assign(p, p + pixels_per_image);
        p += pixels_per_image;
    }
    return images;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw Truncated("IDX label file shorter than its header");
    if (read_be_u32(bytes, 0) != kIdxLabelMagic)
        throw BadMagic("not an IDX label file");
    const std::uint64_t count = read_be_u32(bytes, 4);
    if (bytes.size() - 8 < count)
        throw Truncated("IDX label file declares " + std::to_string(count) +
                        " labels but the payload is too short");
    return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

std::vector<std::uint8_t> encode_idx_images(const std::vector<RawImage>& images) {
    int side = images.empty() ? 0 : images.front().side;
    for (const auto& img : images)
        if (img.side != side)
            throw ShapeMismatch("cannot encode images with mixed side lengths");

    std::vector<std::uint8_t> out;
    out.reserve(16 + images.size() * std::size_t(side) * side);
    append_be_u32(out, kIdxImageMagic);
    append_be_u32(out, static_cast<std::uint32_t>(images.size()));
    append_be_u32(out, static_cast<std::uint32_t>(side));
    append_be_u32(out, static_cast<std::uint32_t>(side));
    for (const auto& img : images)
        out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    append_be_u32(out, kIdxLabelMagic);
    append_be_u32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

Image normalize(const RawImage& raw) {
    Image img;
    img.pixels.resize(raw.side, raw.side);
    for (int r = 0; r < raw.side; ++r)
        for (int c = 0; c < raw.side; ++c)
            img.pixels(r, c) = raw.at(r, c) / 255.0;
    return img;
}

LabeledDataset load_labeled(const std::filesystem::path& images_path,
                            const std::filesystem::path& labels_path, Split split) {
    auto image_bytes = read_file_bytes(images_path);
    auto label_bytes = read_file_bytes(labels_path);
    auto raws = parse_idx_images(image_bytes);
    auto labels = parse_idx_labels(label_bytes);
    if (raws.size() != labels.size())
        throw InputError("image/label count mismatch: " + std::to_string(raws.size()) +
                         " images vs " + std::to_string(labels.size()) + " labels");

    LabeledDataset ds;
    ds.split = split;
    ds.images.reserve(raws.size());
    ds.labels.reserve(labels.size());
    for (std::size_t k = 0; k < raws.size(); ++k) {
        if (labels[k] > 9)
            throw InputError("label " + std::to_string(int(labels[k])) +
                             " at index " + std::to_string(k) + " is outside 0..9");
        ds.images.push_back(normalize(raws[k]));
        ds.labels.push_back(labels[k]);
    }
    return ds;
}

LabeledDataset stratified_subset(const LabeledDataset& ds, int per_class,
                                 std::uint64_t seed) {
    if (per_class < 0) throw InputError("per_class must be non-negative");

    std::vector<std::vector<std::uint32_t>> by_class(10);
    for (std::size_t k = 0; k < ds.labels.size(); ++k)
        by_class[ds.labels[k]].push_back(static_cast<std::uint32_t>(k));

    std::vector<std::uint32_t> chosen;
    chosen.reserve(std::size_t(per_class) * 10);
    for (int c = 0; c < 10; ++c) {
        auto& idx = by_class[c];
        if (static_cast<int>(idx.size()) < per_class)
            throw InsufficientClass("class " + std::to_string(c) + " has only " +
                                    std::to_string(idx.size()) + " items, need " +
                                    std::to_string(per_class));
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        shuffle(std::span<std::uint32_t>(idx), rng);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + per_class);
    }
    std::sort(chosen.begin(), chosen.end());

    LabeledDataset out;
    out.split = ds.split;
    out.images.reserve(chosen.size());
    out.labels.reserve(chosen.size());
    for (auto k : chosen) {
        out.images.push_back(ds.images[k]);
        out.labels.push_back(ds.labels[k]);
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw IoFailure("failed reading " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("failed writing " + path.string());
}

} // namespace corrgraph
