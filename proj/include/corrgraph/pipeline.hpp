#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "corrgraph/dataset.hpp"
#include "corrgraph/features.hpp"
#include "corrgraph/image_io.hpp"

namespace corrgraph {

// Feature maps that make sense per graph. Row and column graphs carry whole
// image lines as node features, so only raw pixels apply; the grid baseline
// keeps scalar pixels; the product graph supports all three maps.
bool valid_combination(GraphKind graph, FeatureKind feature);

// Graph topology for one image.
GraphAdjacency image_graph(const Image& image, GraphKind graph);

// Full record: topology + node features + label, in serialization form
// (canonically sorted upper-triangle edges, row-major float features).
// InputError on a combination valid_combination rejects.
GraphRecord build_record(const Image& image, std::uint8_t label,
                         GraphKind graph, FeatureKind feature);

// Hash of everything that defines a cell's schema (builder version, graph,
// feature, source, image side). Subset size and seed stay out so that train
// and test files of one cell share the hash.
std::uint64_t build_config_hash(GraphKind graph, FeatureKind feature,
                                SourceTag source, std::uint32_t side);

// Converts a labeled image set into a CGDS1 file. Workers split the images;
// records land in the file in image order regardless of thread count, so the
// output bytes depend only on the inputs. `progress(done, total)` fires from
// the writer as records land (throttled), never affecting the output.
using BuildProgress = std::function<void(std::size_t, std::size_t)>;
void build_dataset_file(const LabeledDataset& data, GraphKind graph,
                        FeatureKind feature, SourceTag source,
                        const std::filesystem::path& out_path, int threads,
                        const BuildProgress& progress = {});

} // namespace corrgraph
