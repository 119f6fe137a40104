#include "corrgraph/dataset.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <bit>
#include <cerrno>
#include <cstring>

#include "corrgraph/image_io.hpp"

namespace corrgraph {

static_assert(std::endian::native == std::endian::little,
              "record serialization memcpys little-endian scalars");
static_assert(sizeof(EdgePair) == 8 && alignof(EdgePair) == 4);

const char* to_string(SourceTag t) {
    switch (t) {
        case SourceTag::mnist: return "mnist";
        case SourceTag::fashion: return "fashion";
        case SourceTag::synthetic: return "synthetic";
    }
    return "?";
}

SourceTag parse_source_tag(std::string_view s) {
    if (s == "mnist") return SourceTag::mnist;
    if (s == "fashion") return SourceTag::fashion;
    if (s == "synthetic") return SourceTag::synthetic;
    throw UsageError("unknown source tag: " + std::string(s));
}

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}
constexpr auto kCrcTable = make_crc_table();

// GF(2) operator algebra for crc32_combine, zlib's scheme: a 32x32 bit
// matrix maps the CRC register across a block of zero bits; squaring doubles
// the block length.
std::uint32_t gf2_times(const std::uint32_t* mat, std::uint32_t vec) {
    std::uint32_t sum = 0;
    while (vec) {
        if (vec & 1) sum ^= *mat;
        vec >>= 1;
        ++mat;
    }
    return sum;
}

void gf2_square(std::uint32_t* out, const std::uint32_t* mat) {
    for (int n = 0; n < 32; ++n) out[n] = gf2_times(mat, mat[n]);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) |
           static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 |
           static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    return static_cast<std::uint64_t>(get_u32(p)) |
           static_cast<std::uint64_t>(get_u32(p + 4)) << 32;
}

std::vector<std::uint8_t> encode_header(const DatasetHeader& h,
                                        std::uint32_t crc) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize);
    out.insert(out.end(), kDatasetMagic, kDatasetMagic + 5);
    out.push_back(static_cast<std::uint8_t>(h.graph));
    out.push_back(static_cast<std::uint8_t>(h.feature));
    out.push_back(static_cast<std::uint8_t>(h.source));
    put_u32(out, h.side);
    put_u64(out, h.record_count);
    put_u64(out, h.config_hash);
    put_u32(out, crc);
    return out;
}

// Validates the whole container: header fields, checksum, and the record
// walk. Returns the header and fills `offsets` with each record's start.
DatasetHeader parse_and_verify(std::span<const std::uint8_t> bytes,
                               std::vector<std::size_t>& offsets) {
    if (bytes.size() < kHeaderSize)
        throw Truncated("dataset is smaller than its header");
    if (std::memcmp(bytes.data(), kDatasetMagic, 5) != 0)
        throw BadMagic("not a CGDS1 dataset");

    DatasetHeader h;
    if (bytes[5] > static_cast<std::uint8_t>(GraphKind::product))
        throw CorruptRecord("unknown graph kind in header");
    if (bytes[6] > static_cast<std::uint8_t>(FeatureKind::correlation))
        throw CorruptRecord("unknown feature kind in header");
    if (bytes[7] > static_cast<std::uint8_t>(SourceTag::synthetic))
        throw CorruptRecord("unknown source tag in header");
    h.graph = static_cast<GraphKind>(bytes[5]);
    h.feature = static_cast<FeatureKind>(bytes[6]);
    h.source = static_cast<SourceTag>(bytes[7]);
    h.side = get_u32(bytes.data() + 8);
    h.record_count = get_u64(bytes.data() + 12);
    h.config_hash = get_u64(bytes.data() + 20);
    const std::uint32_t stored_crc = get_u32(bytes.data() + 28);

    std::uint32_t crc = crc32_update(0, bytes.first(28));
    crc = crc32_update(crc, bytes.subspan(kHeaderSize));
    if (crc != stored_crc) throw CorruptRecord("dataset checksum mismatch");

    offsets.clear();
    offsets.reserve(h.record_count);
    std::uint64_t off = kHeaderSize;
    for (std::uint64_t r = 0; r < h.record_count; ++r) {
        if (off + 16 > bytes.size())
            throw Truncated("record header past end of file");
        const std::uint8_t* p = bytes.data() + off;
        const std::uint32_t node_count = get_u32(p);
        const std::uint32_t feature_dim = get_u32(p + 4);
        const std::uint32_t edge_count = get_u32(p + 8);
        if (p[13] != 0 || p[14] != 0 || p[15] != 0)
            throw CorruptRecord("nonzero record padding");
        if (node_count == 0 || feature_dim == 0)
            throw CorruptRecord("record with no nodes or no features");

        const std::uint64_t edge_bytes = 8ull * edge_count;
        const std::uint64_t feat_bytes =
            4ull * node_count * static_cast<std::uint64_t>(feature_dim);
        if (off + 16 + edge_bytes + feat_bytes > bytes.size())
            throw Truncated("record body past end of file");

        const std::uint8_t* ep = p + 16;
        std::uint64_t prev = 0;
        for (std::uint32_t e = 0; e < edge_count; ++e, ep += 8) {
            const std::uint32_t a = get_u32(ep);
            const std::uint32_t b = get_u32(ep + 4);
            if (a > b || b >= node_count)
                throw CorruptRecord("edge pair out of canonical form");
            const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
            if (e > 0 && key <= prev)
                throw CorruptRecord("edges not strictly sorted");
            prev = key;
        }
        offsets.push_back(static_cast<std::size_t>(off));
        off += 16 + edge_bytes + feat_bytes;
    }
    if (off != bytes.size())
        throw CorruptRecord("trailing bytes after last record");
    return h;
}

GraphRecordView view_at(std::span<const std::uint8_t> bytes, std::size_t off) {
    const std::uint8_t* p = bytes.data() + off;
    GraphRecordView v;
    v.node_count = get_u32(p);
    v.feature_dim = get_u32(p + 4);
    const std::uint32_t edge_count = get_u32(p + 8);
    v.label = p[12];
    v.edges = {reinterpret_cast<const EdgePair*>(p + 16), edge_count};
    v.features = {reinterpret_cast<const float*>(p + 16 + 8ull * edge_count),
                  static_cast<std::size_t>(v.node_count) * v.feature_dim};
    return v;
}

} // namespace

std::uint32_t crc32_update(std::uint32_t crc,
                           std::span<const std::uint8_t> bytes) {
    crc = ~crc;
    for (std::uint8_t b : bytes)
        crc = kCrcTable[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    return ~crc;
}

std::uint32_t crc32_combine(std::uint32_t crc_a, std::uint32_t crc_b,
                            std::uint64_t len_b) {
    if (len_b == 0) return crc_a; // appending nothing changes nothing

    std::uint32_t even[32], odd[32];
    odd[0] = 0xEDB88320u; // operator for one zero bit
    std::uint32_t row = 1;
    for (int n = 1; n < 32; ++n) {
        odd[n] = row;
        row <<= 1;
    }
    gf2_square(even, odd); // two zero bits
    gf2_square(odd, even); // four

    // Walk the bits of len_b, squaring as we go; the first square below makes
    // the operator for one whole zero byte.
    do {
        gf2_square(even, odd);
        if (len_b & 1) crc_a = gf2_times(even, crc_a);
        len_b >>= 1;
        if (len_b == 0) break;
        gf2_square(odd, even);
        if (len_b & 1) crc_a = gf2_times(odd, crc_a);
        len_b >>= 1;
    } while (len_b != 0);
    return crc_a ^ crc_b;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : text) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, GraphKind graph,
                             FeatureKind feature, SourceTag source,
                             std::uint32_t side, std::uint64_t config_hash)
    : path_(path) {
    header_.graph = graph;
    header_.feature = feature;
    header_.source = source;
    header_.side = side;
    header_.config_hash = config_hash;

    file_ = std::fopen(path.c_str(), "wb");
    if (!file_)
        throw IoFailure("cannot open " + path.string() + " for writing: " +
                        std::strerror(errno));
    const auto placeholder = encode_header(header_, 0);
    if (std::fwrite(placeholder.data(), 1, placeholder.size(), file_) !=
        placeholder.size())
        throw IoFailure("short write on " + path_.string());
}

DatasetWriter::~DatasetWriter() {
    if (file_) std::fclose(file_);
}

void DatasetWriter::append(const GraphRecord& record) {
    if (!file_) throw InternalError("append on a closed dataset writer");
    if (record.node_count == 0 || record.feature_dim == 0)
        throw InternalError("record with no nodes or no features");
    if (record.features.size() !=
        static_cast<std::size_t>(record.node_count) * record.feature_dim)
        throw InternalError("record feature buffer size mismatch");
    std::uint64_t prev = 0;
    for (std::size_t e = 0; e < record.edges.size(); ++e) {
        const auto [a, b] = record.edges[e];
        if (a > b || b >= record.node_count)
            throw InternalError("edge pair out of canonical form");
        const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
        if (e > 0 && key <= prev) throw InternalError("edges not sorted");
        prev = key;
    }

    scratch_.clear();
    put_u32(scratch_, record.node_count);
    put_u32(scratch_, record.feature_dim);
    put_u32(scratch_, static_cast<std::uint32_t>(record.edges.size()));
    scratch_.push_back(record.label);
    scratch_.push_back(0);
    scratch_.push_back(0);
    scratch_.push_back(0);
    for (const auto& [a, b] : record.edges) {
        put_u32(scratch_, a);
        put_u32(scratch_, b);
    }
    const auto* fbytes = reinterpret_cast<const std::uint8_t*>(record.features.data());
    scratch_.insert(scratch_.end(), fbytes, fbytes + 4 * record.features.size());

    if (std::fwrite(scratch_.data(), 1, scratch_.size(), file_) != scratch_.size())
        throw IoFailure("short write on " + path_.string());
    records_crc_ = crc32_update(records_crc_, scratch_);
    record_bytes_ += scratch_.size();
    ++header_.record_count;
}

void DatasetWriter::close() {
    if (!file_) return;
    auto header = encode_header(header_, 0);
    const std::uint32_t head_crc =
        crc32(std::span<const std::uint8_t>(header.data(), 28));
    const std::uint32_t crc = crc32_combine(head_crc, records_crc_, record_bytes_);
    header = encode_header(header_, crc);

    bool ok = std::fseek(file_, 0, SEEK_SET) == 0;
    ok = ok && std::fwrite(header.data(), 1, header.size(), file_) == header.size();
    ok = ok && std::fflush(file_) == 0;
    ok = std::fclose(file_) == 0 && ok;
    file_ = nullptr;
    if (!ok) throw IoFailure("failed to finalize " + path_.string());
}

LoadedDataset read_dataset(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    std::vector<std::size_t> offsets;
    LoadedDataset out;
    out.header = parse_and_verify(bytes, offsets);
    out.records.reserve(offsets.size());
    for (std::size_t off : offsets) {
        const GraphRecordView v = view_at(bytes, off);
        GraphRecord r;
        r.node_count = v.node_count;
        r.feature_dim = v.feature_dim;
        r.label = v.label;
        r.edges.assign(v.edges.begin(), v.edges.end());
        r.features.assign(v.features.begin(), v.features.end());
        out.records.push_back(std::move(r));
    }
    return out;
}

MappedDataset::MappedDataset(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0)
        throw IoFailure("cannot open " + path.string() + ": " +
                        std::strerror(errno));
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
        const int err = errno;
        ::close(fd_);
        throw IoFailure("cannot stat " + path.string() + ": " +
                        std::strerror(err));
    }
    bytes_ = static_cast<std::size_t>(st.st_size);
    if (bytes_ < kHeaderSize) {
        ::close(fd_);
        throw Truncated("dataset is smaller than its header");
    }
    void* map = ::mmap(nullptr, bytes_, PROT_READ, MAP_PRIVATE, fd_, 0);
    if (map == MAP_FAILED) {
        const int err = errno;
        ::close(fd_);
        throw IoFailure("cannot map " + path.string() + ": " +
                        std::strerror(err));
    }
    data_ = static_cast<const std::uint8_t*>(map);
    try {
        header_ = parse_and_verify({data_, bytes_}, offsets_);
    } catch (...) {
        ::munmap(map, bytes_);
        ::close(fd_);
        throw;
    }
}

MappedDataset::~MappedDataset() {
    if (data_) ::munmap(const_cast<std::uint8_t*>(data_), bytes_);
    if (fd_ >= 0) ::close(fd_);
}

GraphRecordView MappedDataset::get(std::size_t i) const {
    if (i >= offsets_.size()) throw InternalError("record index out of range");
    return view_at({data_, bytes_}, offsets_[i]);
}

std::string export_dot(const GraphRecordView& g, DatasetHeader header,
                       std::size_t index) {
    if (g.node_count > 10000)
        throw TooLarge("refusing to render a graph with more than 10000 nodes");
    std::string out = "graph record_" + std::to_string(index) + " {\n";
    out += "  // source=" + std::string(to_string(header.source)) +
           " graph=" + to_string(header.graph) +
           " feature=" + to_string(header.feature) +
           " label=" + std::to_string(g.label) + "\n";
    out += "  node [shape=point];\n";
    for (std::uint32_t i = 0; i < g.node_count; ++i)
        out += "  n" + std::to_string(i) + ";\n";
    for (const auto& [a, b] : g.edges)
        out += "  n" + std::to_string(a) + " -- n" + std::to_string(b) + ";\n";
    out += "}\n";
    return out;
}

} // namespace corrgraph
