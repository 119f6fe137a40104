#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "corrgraph/dataset.hpp"
#include "corrgraph/errors.hpp"
#include "corrgraph/gnn.hpp"
#include "corrgraph/image_io.hpp"
#include "corrgraph/pipeline.hpp"
#include "corrgraph/reproduce.hpp"

namespace cg = corrgraph;

namespace {

// 0 success, 2 usage, 3 input contract, 4 data corruption, 5 internal
// invariant; anything else (I/O, environment) gets the generic 1.
int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const cg::UsageError*>(&e)) return 2;
    if (dynamic_cast<const cg::InputError*>(&e)) return 3;
    if (dynamic_cast<const cg::DataError*>(&e)) return 4;
    if (dynamic_cast<const cg::InternalError*>(&e)) return 5;
    return 1;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw cg::UsageError("bad seed in list: '" + tok + "'");
        }
    }
    if (seeds.empty()) throw cg::UsageError("empty seed list");
    return seeds;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    cg::write_file_bytes(path,
                         {reinterpret_cast<const std::uint8_t*>(text.data()),
                          text.size()});
}

struct BuildArgs {
    std::string images, labels, graph, feature, out;
    std::string source = "synthetic";
    int per_class = 0;
    std::uint64_t seed = 1;
    int threads = 1;
};

void cmd_build(const BuildArgs& a) {
    const cg::GraphKind graph = cg::parse_graph_kind(a.graph);
    const cg::FeatureKind feature = cg::parse_feature_kind(a.feature);
    const cg::SourceTag source = cg::parse_source_tag(a.source);
    if (!cg::valid_combination(graph, feature))
        throw cg::UsageError(a.feature + " features do not apply to " + a.graph +
                             " graphs");

    cg::LabeledDataset data =
        cg::load_labeled(a.images, a.labels, cg::Split::train);
    if (a.per_class > 0) data = cg::stratified_subset(data, a.per_class, a.seed);
    std::fprintf(stderr, "building %zu records (%s/%s) -> %s\n", data.size(),
                 a.graph.c_str(), a.feature.c_str(), a.out.c_str());
    cg::build_dataset_file(data, graph, feature, source, a.out, a.threads,
                           [](std::size_t done, std::size_t total) {
                               std::fprintf(stderr, "  %zu/%zu records\n", done,
                                            total);
                           });
    std::fprintf(stderr, "done\n");
}

struct TrainArgs {
    std::string train, test, report;
    int layers = 3;
    int width = 64;
    double lr = 1e-3;
    int epochs = 30;
    int batch = 32;
    std::uint64_t seed = 1;
};

void cmd_train(const TrainArgs& a) {
    cg::MappedDataset train(a.train);
    cg::MappedDataset test(a.test);
    const auto& th = train.header();
    const auto& eh = test.header();
    if (th.graph != eh.graph || th.feature != eh.feature ||
        th.source != eh.source || th.side != eh.side ||
        th.config_hash != eh.config_hash)
        throw cg::TagMismatch(
            "train and test datasets disagree on representation tags");

    cg::GcnConfig config;
    config.widths.assign(a.layers, a.width);
    config.learning_rate = a.lr;
    config.epochs = a.epochs;
    config.batch_size = a.batch;
    config.seed = a.seed;

    const cg::TrainReport report = cg::train_and_evaluate(train, test, config);
    write_text(a.report, cg::serialize_report(report));
    std::fprintf(stderr, "trained on %zu graphs, evaluated %zu, %.1fs\n",
                 report.train_count, report.test_count,
                 report.wall_clock_seconds);
    std::printf("test_acc=%.17g\n", report.test_accuracy);
}

struct ReproduceArgs {
    std::string data, out;
    std::string seeds = "1,2,3";
    std::string scale = "desk";
    int threads = 1;
};

void cmd_reproduce(const ReproduceArgs& a) {
    cg::ReproduceConfig config;
    if (!a.data.empty()) {
        config.data_dir = a.data;
    } else if (const char* env = std::getenv("CORRGRAPH_DATA_DIR");
               env && *env) {
        config.data_dir = env;
    } else {
        throw cg::UsageError("pass --data or set CORRGRAPH_DATA_DIR");
    }
    config.out_dir = a.out;
    config.seeds = parse_seed_list(a.seeds);
    config.scale = a.scale;
    config.threads = a.threads;
    std::cout << cg::run_reproduce(config, std::cerr);
}

struct ExportArgs {
    std::string dataset, out;
    std::size_t index = 0;
};

void cmd_export_dot(const ExportArgs& a) {
    cg::MappedDataset ds(a.dataset);
    if (a.index >= ds.size())
        throw cg::InputError("record index " + std::to_string(a.index) +
                             " out of range (dataset has " +
                             std::to_string(ds.size()) + " records)");
    const std::string dot = cg::export_dot(ds.get(a.index), ds.header(), a.index);
    if (a.out.empty())
        std::cout << dot;
    else
        write_text(a.out, dot);
}

void cmd_info(const std::string& path) {
    cg::MappedDataset ds(path);
    const auto& h = ds.header();
    std::printf("file=%s\n", path.c_str());
    std::printf("graph=%s feature=%s source=%s side=%u records=%zu\n",
                cg::to_string(h.graph), cg::to_string(h.feature),
                cg::to_string(h.source), h.side, ds.size());
    std::printf("config_hash=%016llx\n",
                static_cast<unsigned long long>(h.config_hash));
    if (ds.size() > 0) {
        const cg::GraphRecordView r = ds.get(0);
        std::printf("record[0]: nodes=%u feature_dim=%u edges=%zu label=%u\n",
                    r.node_count, r.feature_dim, r.edges.size(),
                    static_cast<unsigned>(r.label));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlation-derived graph pipeline for grayscale images"};
    app.require_subcommand(1);

    BuildArgs build;
    auto* sub_build =
        app.add_subcommand("build", "convert IDX images into a graph dataset");
    sub_build->add_option("--images", build.images, "IDX image file")->required();
    sub_build->add_option("--labels", build.labels, "IDX label file")->required();
    sub_build->add_option("--graph", build.graph,
                          "graph kind: grid|row|column|product")
        ->required();
    sub_build->add_option("--feature", build.feature,
                          "feature kind: pixel|standard|correlation")
        ->required();
    sub_build->add_option("--out", build.out, "output dataset path")->required();
    sub_build->add_option("--source", build.source,
                          "source tag stored in the header "
                          "(mnist|fashion|synthetic)");
    sub_build->add_option("--per-class", build.per_class,
                          "images per class (0 = all)");
    sub_build->add_option("--seed", build.seed, "subset selection seed");
    sub_build->add_option("--threads", build.threads, "worker threads")
        ->check(CLI::PositiveNumber);

    TrainArgs train;
    auto* sub_train =
        app.add_subcommand("train", "train the GCN on a built dataset");
    sub_train->add_option("--train", train.train, "training dataset")->required();
    sub_train->add_option("--test", train.test, "test dataset")->required();
    sub_train->add_option("--report", train.report, "report output path")
        ->required();
    sub_train->add_option("--layers", train.layers, "conv layer count")
        ->check(CLI::PositiveNumber);
    sub_train->add_option("--width", train.width, "conv layer width")
        ->check(CLI::PositiveNumber);
    sub_train->add_option("--lr", train.lr, "Adam learning rate");
    sub_train->add_option("--epochs", train.epochs, "training epochs")
        ->check(CLI::NonNegativeNumber);
    sub_train->add_option("--batch", train.batch, "mini-batch size")
        ->check(CLI::PositiveNumber);
    sub_train->add_option("--seed", train.seed, "init and shuffle seed");

    ReproduceArgs repro;
    auto* sub_repro = app.add_subcommand(
        "reproduce", "run the full graph/feature comparison table");
    sub_repro->add_option("--data", repro.data,
                          "data directory with mnist/ and fashion/ "
                          "(default: $CORRGRAPH_DATA_DIR)");
    sub_repro->add_option("--out", repro.out, "output directory")->required();
    sub_repro->add_option("--seeds", repro.seeds, "comma-separated seed list");
    sub_repro->add_option("--scale", repro.scale, "smoke|desk|full");
    sub_repro->add_option("--threads", repro.threads, "builder threads")
        ->check(CLI::PositiveNumber);

    ExportArgs exp;
    auto* sub_export =
        app.add_subcommand("export-dot", "render one record as Graphviz text");
    sub_export->add_option("--dataset", exp.dataset, "dataset path")->required();
    sub_export->add_option("--index", exp.index, "record index");
    sub_export->add_option("--out", exp.out, "output path (default stdout)");

    std::string info_path;
    auto* sub_info = app.add_subcommand("info", "print dataset header facts");
    sub_info->add_option("--dataset", info_path, "dataset path")->required();

    sub_build->callback([&] { cmd_build(build); });
    sub_train->callback([&] { cmd_train(train); });
    sub_repro->callback([&] { cmd_reproduce(repro); });
    sub_export->callback([&] { cmd_export_dot(exp); });
    sub_info->callback([&] { cmd_info(info_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const cg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
