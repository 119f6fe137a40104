#include "corrgraph/pipeline.hpp"

#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "corrgraph/product.hpp"

namespace corrgraph {

bool valid_combination(GraphKind graph, FeatureKind feature) {
    if (graph == GraphKind::product) return true;
    return feature == FeatureKind::pixel;
}

GraphAdjacency image_graph(const Image& image, GraphKind graph) {
    switch (graph) {
        case GraphKind::grid: return grid_graph(image.side());
        case GraphKind::row: return row_graph(image);
        case GraphKind::column: return column_graph(image);
        case GraphKind::product:
            return masked_product(row_graph(image), column_graph(image));
    }
    throw InternalError("unreachable graph kind");
}

GraphRecord build_record(const Image& image, std::uint8_t label,
                         GraphKind graph, FeatureKind feature) {
    if (!valid_combination(graph, feature))
        throw InputError(std::string(to_string(feature)) +
                         " features do not apply to " + to_string(graph) +
                         " graphs");

    const GraphAdjacency adj = image_graph(image, graph);

    NodeFeatures feats;
    switch (feature) {
        case FeatureKind::pixel:
            feats = pixel_features(image, graph);
            break;
        case FeatureKind::standard:
            feats = standard_features(image);
            break;
        case FeatureKind::correlation:
            feats = g_mean(correlation_feature_matrix(image, Axis::row),
                           correlation_feature_matrix(image, Axis::column));
            break;
    }
    if (feats.node_count() != adj.nodes())
        throw InternalError("feature rows do not match graph nodes");

    GraphRecord r;
    r.node_count = static_cast<std::uint32_t>(adj.nodes());
    r.feature_dim = static_cast<std::uint32_t>(feats.dim());
    r.label = label;
    for (int i = 0; i < adj.nodes(); ++i)
        for (int j = i; j < adj.nodes(); ++j)
            if (adj.a(i, j) != 0)
                r.edges.push_back({static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(j)});
    r.features.reserve(static_cast<std::size_t>(r.node_count) * r.feature_dim);
    for (int i = 0; i < feats.node_count(); ++i)
        for (int j = 0; j < feats.dim(); ++j)
            r.features.push_back(static_cast<float>(feats.values(i, j)));
    return r;
}

std::uint64_t build_config_hash(GraphKind graph, FeatureKind feature,
                                SourceTag source, std::uint32_t side) {
    std::string text = "corrgraph build v1|graph=";
    text += to_string(graph);
    text += "|feature=";
    text += to_string(feature);
    text += "|source=";
    text += to_string(source);
    text += "|side=" + std::to_string(side);
    return fnv1a(text);
}

void build_dataset_file(const LabeledDataset& data, GraphKind graph,
                        FeatureKind feature, SourceTag source,
                        const std::filesystem::path& out_path, int threads,
                        const BuildProgress& progress) {
    if (data.images.empty()) throw EmptyDataset("no images to build from");
    if (data.images.size() != data.labels.size())
        throw InternalError("image/label count mismatch");
    const int side = data.images[0].side();
    for (const Image& im : data.images)
        if (im.side() != side)
            throw ShapeMismatch("images in one dataset must share a side length");
    if (!valid_combination(graph, feature))
        throw InputError(std::string(to_string(feature)) +
                         " features do not apply to " + to_string(graph) +
                         " graphs");

    DatasetWriter writer(out_path, graph, feature, source,
                         static_cast<std::uint32_t>(side),
                         build_config_hash(graph, feature, source,
                                           static_cast<std::uint32_t>(side)));
    const std::size_t count = data.images.size();
    if (threads < 1) threads = 1;
    const std::size_t report_every = count < 50 ? 1 : count / 50;
    auto tick = [&](std::size_t done) {
        if (progress && (done % report_every == 0 || done == count))
            progress(done, count);
    };

    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            writer.append(build_record(data.images[i],
                                       static_cast<std::uint8_t>(data.labels[i]),
                                       graph, feature));
            tick(i + 1);
        }
        writer.close();
        return;
    }

    // Workers claim image indices in order; finished records park in
    // `pending` until the writer reaches their index, so the file bytes match
    // the single-threaded build exactly. The window bounds how far compute
    // may run ahead of the writer (memory cap); the record the writer needs
    // next always fits in the window, so nothing can deadlock.
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, GraphRecord> pending;
    std::size_t next_claim = 0;
    std::size_t write_cursor = 0;
    std::exception_ptr failure;
    const std::size_t window = 2 * static_cast<std::size_t>(threads) + 2;

    auto worker = [&] {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard lock(mu);
                if (failure || next_claim >= count) return;
                idx = next_claim++;
            }
            try {
                GraphRecord r =
                    build_record(data.images[idx],
                                 static_cast<std::uint8_t>(data.labels[idx]),
                                 graph, feature);
                std::unique_lock lock(mu);
                cv.wait(lock,
                        [&] { return failure || idx < write_cursor + window; });
                if (failure) return;
                pending.emplace(idx, std::move(r));
                cv.notify_all();
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);

    {
        std::unique_lock lock(mu);
        while (write_cursor < count && !failure) {
            cv.wait(lock, [&] {
                return failure || pending.find(write_cursor) != pending.end();
            });
            if (failure) break;
            GraphRecord r = std::move(pending.at(write_cursor));
            pending.erase(write_cursor);
            lock.unlock();
            try {
                writer.append(r);
            } catch (...) {
                std::lock_guard lg(mu);
                if (!failure) failure = std::current_exception();
                cv.notify_all();
                break;
            }
            tick(write_cursor + 1);
            lock.lock();
            ++write_cursor;
            cv.notify_all();
        }
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    writer.close();
}

} // namespace corrgraph
