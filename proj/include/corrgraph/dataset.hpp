#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corrgraph/errors.hpp"
#include "corrgraph/features.hpp"
#include "corrgraph/gnn.hpp"

namespace corrgraph {

// Where the images came from. Stored in the file header so a dataset is
// self-describing.
enum class SourceTag : std::uint8_t { mnist = 0, fashion = 1, synthetic = 2 };

const char* to_string(SourceTag t);
SourceTag parse_source_tag(std::string_view s); // UsageError on unknown names

// CRC-32, polynomial 0xEDB88320 (the zlib/PNG one), incremental form.
std::uint32_t crc32_update(std::uint32_t crc, std::span<const std::uint8_t> bytes);
inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    return crc32_update(0, bytes);
}
// crc32(A ++ B) from crc32(A), crc32(B) and |B|, without touching the bytes
// again. Lets the writer patch the header checksum after streaming gigabytes
// of records.
std::uint32_t crc32_combine(std::uint32_t crc_a, std::uint32_t crc_b,
                            std::uint64_t len_b);

// FNV-1a 64-bit, used for the config hash in the header.
std::uint64_t fnv1a(std::string_view text);

// CGDS1 container. Fixed 32-byte header, then records back to back:
//
//   [0,5)   magic "CGDS1"
//   5       graph kind      (GraphKind value)
//   6       feature kind    (FeatureKind value)
//   7       source tag      (SourceTag value)
//   [8,12)  image side N    u32 LE
//   [12,20) record count    u64 LE
//   [20,28) config hash     u64 LE
//   [28,32) file CRC-32     u32 LE, over bytes [0,28) then [32,end)
//
// Record: node_count u32, feature_dim u32, edge_count u32, label u8 + three
// zero bytes, then edge_count pairs (u32,u32) and node_count*feature_dim
// f32, all little-endian. Edges are undirected, stored once with
// first <= second, strictly increasing lexicographically. Every field is
// 4-byte aligned, so a reader can map the file and serve views in place.
inline constexpr char kDatasetMagic[5] = {'C', 'G', 'D', 'S', '1'};
inline constexpr std::size_t kHeaderSize = 32;

struct DatasetHeader {
    GraphKind graph = GraphKind::grid;
    FeatureKind feature = FeatureKind::pixel;
    SourceTag source = SourceTag::synthetic;
    std::uint32_t side = 0;
    std::uint64_t record_count = 0;
    std::uint64_t config_hash = 0;
};

// Streams records to disk; close() patches the record count and checksum
// into the header. A file from a writer that never reached close() fails the
// checksum on read, which is the intended crash behaviour.
class DatasetWriter {
public:
    DatasetWriter(const std::filesystem::path& path, GraphKind graph,
                  FeatureKind feature, SourceTag source, std::uint32_t side,
                  std::uint64_t config_hash);
    ~DatasetWriter();
    DatasetWriter(const DatasetWriter&) = delete;
    DatasetWriter& operator=(const DatasetWriter&) = delete;

    void append(const GraphRecord& record);
    void close();

    std::uint64_t record_count() const { return header_.record_count; }

private:
    DatasetHeader header_;
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    std::uint32_t records_crc_ = 0;
    std::uint64_t record_bytes_ = 0;
    std::vector<std::uint8_t> scratch_;
};

// Whole-file load; fine for tests and small datasets.
struct LoadedDataset {
    DatasetHeader header;
    std::vector<GraphRecord> records;
};
LoadedDataset read_dataset(const std::filesystem::path& path);

// mmap-backed reader. Verifies the checksum and walks the record layout once
// up front, then hands out zero-copy views, so training can stream datasets
// larger than memory.
class MappedDataset final : public GraphSource {
public:
    explicit MappedDataset(const std::filesystem::path& path);
    ~MappedDataset();
    MappedDataset(const MappedDataset&) = delete;
    MappedDataset& operator=(const MappedDataset&) = delete;

    const DatasetHeader& header() const { return header_; }
    std::size_t size() const override { return offsets_.size(); }
    GraphRecordView get(std::size_t i) const override;

private:
    DatasetHeader header_;
    int fd_ = -1;
    const std::uint8_t* data_ = nullptr;
    std::size_t bytes_ = 0;
    std::vector<std::size_t> offsets_;
};

// Graphviz rendering of one record's topology.
std::string export_dot(const GraphRecordView& g, DatasetHeader header,
                       std::size_t index);

} // namespace corrgraph
