// End-to-end acceptance gate. Each criterion prints exactly one
// "ACCEPTANCE <n> <label>: PASS|FAIL" line; ctest fails if any line fails.
// Library-level criteria run first because they finish in seconds; the two
// desk-scale ordering criteria train 36 models and run last (their datasets
// and reports are cached under the build tree, so reruns are cheap).

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corrgraph/correlation.hpp"
#include "corrgraph/dataset.hpp"
#include "corrgraph/features.hpp"
#include "corrgraph/gnn.hpp"
#include "corrgraph/image_io.hpp"
#include "corrgraph/pipeline.hpp"
#include "corrgraph/product.hpp"
#include "corrgraph/reproduce.hpp"
#include "corrgraph/rng.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace corrgraph;

namespace {

void verdict(int n, const std::string& label, bool ok, const std::string& detail = "") {
    std::printf("ACCEPTANCE %d %s: %s%s%s\n", n, label.c_str(), ok ? "PASS" : "FAIL",
                detail.empty() ? "" : " ", detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, "criterion ", n, " ", label, " ", detail);
}

Image random_image(int side, Rng& rng) {
    Image img;
    img.pixels.resize(side, side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) img.pixels(r, c) = rng.unit();
    return img;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CORRGRAPH_CLI_PATH) + " " + args;
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

fs::path out_root() {
    const fs::path p(CORRGRAPH_ACCEPT_OUT);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    const auto bytes = read_file_bytes(p);
    return std::string(bytes.begin(), bytes.end());
}

} // namespace

TEST_CASE("closed-form correlation features") {
    // G(i,j) must equal A(i,j)/2 + mean of column i / 2, both axes.
    Rng rng(301);
    bool ok = true;
    double worst = 0.0;
    int images_checked = 0;
    for (const int n : {4, 9, 28}) {
        for (int k = 0; k < 34 && images_checked < 100; ++k, ++images_checked) {
            const Image img = random_image(n, rng);
            for (const auto axis : {Axis::row, Axis::column}) {
                const Eigen::MatrixXd a =
                    axis == Axis::row ? img.pixels : img.pixels.transpose().eval();
                const CorrelationFeatureMatrix g =
                    correlation_feature_matrix(img, axis);
                for (int i = 0; i < n; ++i) {
                    const double col_mean = a.col(i).mean();
                    for (int j = 0; j < n; ++j) {
                        const double want = a(i, j) / 2.0 + col_mean / 2.0;
                        worst = std::max(worst, std::abs(g.g(i, j) - want));
                    }
                }
            }
        }
    }
    ok = worst < 1e-6 && images_checked == 100;
    char detail[96];
    std::snprintf(detail, sizeof detail, "(100 images, worst abs err %.2e)", worst);
    verdict(3, "correlation-feature closed form", ok, detail);
}

TEST_CASE("product-graph algebraic identities") {
    bool ok = true;
    auto naive_kron = [](const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
        const int p = static_cast<int>(a.rows());
        const int q = static_cast<int>(b.rows());
        Eigen::MatrixXi out(p * q, p * q);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int u = 0; u < q; ++u)
                    for (int v = 0; v < q; ++v)
                        out(i * q + u, j * q + v) = a(i, j) * b(u, v);
        return out;
    };
    auto check_pair = [&](const Eigen::MatrixXi& ar, const Eigen::MatrixXi& ac,
                          bool symmetric_inputs) {
        const int n = static_cast<int>(ar.rows());
        if (kron(ar, ac) != naive_kron(ar, ac)) ok = false;
        GraphAdjacency gr, gc;
        gr.a = ar;
        gc.a = ac;
        const Eigen::MatrixXi a2 = cartesian_sum(gr, gc);
        for (int i = 0; i < n && ok; ++i)
            for (int u = 0; u < n; ++u)
                for (int j = 0; j < n; ++j)
                    for (int v = 0; v < n; ++v) {
                        const int want = ar(i, j) * (u == v ? 1 : 0) +
                                         (i == j ? 1 : 0) * ac(u, v);
                        if (a2(i * n + u, j * n + v) != want) {
                            ok = false;
                            break;
                        }
                    }
        if (symmetric_inputs) {
            const GraphAdjacency prod = masked_product(gr, gc);
            if (prod.a != prod.a.transpose().eval()) ok = false;
        }
    };

    // Every binary 2x2 pair, exhaustively.
    for (unsigned bits = 0; bits < 256; ++bits) {
        Eigen::MatrixXi a(2, 2), b(2, 2);
        a << (bits >> 0 & 1), (bits >> 1 & 1), (bits >> 2 & 1), (bits >> 3 & 1);
        b << (bits >> 4 & 1), (bits >> 5 & 1), (bits >> 6 & 1), (bits >> 7 & 1);
        const bool symmetric = a(0, 1) == a(1, 0) && b(0, 1) == b(1, 0);
        check_pair(a, b, symmetric);
    }
    // Fifty random symmetric 4x4 pairs.
    Rng rng(302);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXi a = Eigen::MatrixXi::Zero(4, 4), b = a;
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                a(i, j) = a(j, i) = static_cast<int>(rng.below(2));
                b(i, j) = b(j, i) = static_cast<int>(rng.below(2));
            }
        check_pair(a, b, true);
    }
    verdict(4, "kron/cartesian/masked-product identities", ok,
            "(256 exhaustive 2x2 + 50 random 4x4 pairs)");
}

TEST_CASE("row-graph shift equivariance") {
    Rng rng(303);
    bool ok = true;
    const int n = 8;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const Image img = random_image(n, rng);
        const GraphAdjacency base = row_graph(img);
        for (int s = 0; s < n && ok; ++s) {
            Image shifted;
            shifted.pixels = cyclic_row_shift(img.pixels, s);
            const GraphAdjacency moved = row_graph(shifted);
            for (int i = 0; i < n && ok; ++i)
                for (int j = 0; j < n; ++j)
                    if (moved.a(i, j) != base.a((i + s) % n, (j + s) % n)) {
                        ok = false;
                        break;
                    }
        }
    }
    verdict(5, "shift equivariance", ok, "(20 images x 8 shifts, exact)");
}

TEST_CASE("kmeans against exhaustive minimum SSE") {
    bool ok = true;
    double worst_gap = 0.0;
    auto sse_of = [](const Eigen::MatrixXd& rows, const std::vector<int>& assign) {
        double sse = 0.0;
        for (int cluster = 0; cluster < 2; ++cluster) {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(rows.cols());
            int count = 0;
            for (int i = 0; i < rows.rows(); ++i)
                if (assign[i] == cluster) {
                    sum += rows.row(i).transpose();
                    ++count;
                }
            if (count == 0) continue;
            const Eigen::VectorXd c = sum / count;
            for (int i = 0; i < rows.rows(); ++i)
                if (assign[i] == cluster)
                    sse += (rows.row(i).transpose() - c).squaredNorm();
        }
        return sse;
    };

    for (int trial = 0; trial < 200; ++trial) {
        Rng rng(derive_seed(304, static_cast<std::uint64_t>(trial)));
        const int side = 2 + static_cast<int>(rng.below(3)); // 3, 6, or 10 rows
        const int count = side * (side + 1) / 2;
        PairFeatureTable table;
        table.side = 0;
        table.rows.resize(count, side);
        for (int i = 0; i < count; ++i) {
            table.pairs.emplace_back(0, i);
            for (int d = 0; d < side; ++d) table.rows(i, d) = rng.unit();
        }

        const auto labels = kmeans2(table);
        std::vector<int> assign(count);
        for (int i = 0; i < count; ++i)
            assign[i] = labels[i] == EdgeLabel::edge ? 1 : 0;
        const double got = sse_of(table.rows, assign);

        double best = got;
        for (unsigned mask = 0; mask < (1u << count); ++mask) {
            std::vector<int> cand(count);
            for (int i = 0; i < count; ++i) cand[i] = mask >> i & 1;
            best = std::min(best, sse_of(table.rows, cand));
        }
        worst_gap = std::max(worst_gap, got - best);
        if (got - best > 1e-9) ok = false;
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "(200 tables, worst SSE gap %.2e)",
                  worst_gap);
    verdict(6, "2-means exhaustive-minimum oracle", ok, detail);
}

TEST_CASE("gradient check against central differences") {
    GcnConfig cfg;
    cfg.widths = {4, 3}; // 2-layer config
    cfg.classes = 3;
    cfg.seed = 305;
    GcnModel model(3, cfg);
    const std::vector<double> theta = model.parameters();

    bool ok = true;
    double worst_rel = 0.0;
    Rng rng(305);
    for (int trial = 0; trial < 20; ++trial) {
        GraphRecord g;
        g.node_count = 5;
        g.feature_dim = 3;
        g.label = static_cast<std::uint8_t>(rng.below(3));
        for (std::uint32_t i = 0; i < 5; ++i)
            for (std::uint32_t j = i; j < 5; ++j)
                if (rng.below(2) == 0) g.edges.push_back({i, j});
        g.features.resize(15);
        for (auto& f : g.features) f = static_cast<float>(rng.unit());

        const std::vector<double> analytic = model.gradient(g.view());
        const double h = 1e-4;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            std::vector<double> bumped = theta;
            bumped[k] = theta[k] + h;
            model.set_parameters(bumped);
            const double up = model.loss(g.view());
            bumped[k] = theta[k] - h;
            model.set_parameters(bumped);
            const double down = model.loss(g.view());
            model.set_parameters(theta);

            const double numeric = (up - down) / (2.0 * h);
            const double scale =
                std::max({std::abs(numeric), std::abs(analytic[k]), 1e-3});
            const double rel = std::abs(numeric - analytic[k]) / scale;
            worst_rel = std::max(worst_rel, rel);
            if (rel > 1e-3) ok = false;
        }
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "(20 graphs, worst rel err %.2e)",
                  worst_rel);
    verdict(7, "analytic gradients", ok, detail);
}

TEST_CASE("serialization robustness") {
    const fs::path dir = out_root() / "format";
    fs::create_directories(dir);
    const fs::path path = dir / "thousand.cgds";

    Rng rng(306);
    std::vector<GraphRecord> records;
    for (int k = 0; k < 1000; ++k) {
        GraphRecord g;
        g.node_count = 1 + static_cast<std::uint32_t>(rng.below(12));
        g.feature_dim = 1 + static_cast<std::uint32_t>(rng.below(6));
        g.label = static_cast<std::uint8_t>(rng.below(10));
        for (std::uint32_t i = 0; i < g.node_count; ++i)
            for (std::uint32_t j = i; j < g.node_count; ++j)
                if (rng.below(4) == 0) g.edges.push_back({i, j});
        g.features.resize(std::size_t(g.node_count) * g.feature_dim);
        for (auto& f : g.features) f = static_cast<float>(rng.unit());
        records.push_back(std::move(g));
    }
    {
        DatasetWriter writer(path, GraphKind::product, FeatureKind::pixel,
                             SourceTag::synthetic, 12, 77);
        for (const auto& g : records) writer.append(g);
        writer.close();
    }

    bool round_trip = true;
    const LoadedDataset loaded = read_dataset(path);
    if (loaded.records.size() != records.size()) round_trip = false;
    for (std::size_t k = 0; round_trip && k < records.size(); ++k) {
        const auto& a = records[k];
        const auto& b = loaded.records[k];
        round_trip = a.node_count == b.node_count && a.feature_dim == b.feature_dim &&
                     a.label == b.label && a.edges == b.edges &&
                     a.features == b.features;
    }

    // Every single-byte header corruption must make the CLI exit with code 4.
    bool rejected = true;
    const auto good = read_file_bytes(path);
    const fs::path bad_path = dir / "corrupt.cgds";
    for (std::size_t pos = 0; pos < kHeaderSize; ++pos) {
        auto bad = good;
        bad[pos] ^= 0x01;
        write_file_bytes(bad_path, bad);
        const int code =
            run_cli("info --dataset " + bad_path.string() + " > /dev/null 2>&1");
        if (code != 4) rejected = false;
    }

    char detail[96];
    std::snprintf(detail, sizeof detail,
                  "(1000 records%s, 32/32 header corruptions%s)",
                  round_trip ? " round-trip" : " MISMATCH",
                  rejected ? " exit 4" : " MISSED");
    verdict(9, "dataset format robustness", round_trip && rejected, detail);
}

TEST_CASE("CLI determinism across reruns and thread counts") {
    const fs::path dir = out_root() / "determinism";
    fs::create_directories(dir);

    // Synthetic IDX fixture: 40 8x8 images, labels round-robin.
    Rng rng(307);
    std::vector<RawImage> images;
    std::vector<std::uint8_t> labels;
    for (int k = 0; k < 40; ++k) {
        RawImage img;
        img.side = 8;
        img.pixels.resize(64);
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
        images.push_back(std::move(img));
        labels.push_back(static_cast<std::uint8_t>(k % 10));
    }
    const fs::path images_path = dir / "imgs.idx";
    const fs::path labels_path = dir / "lbls.idx";
    write_file_bytes(images_path, encode_idx_images(images));
    write_file_bytes(labels_path, encode_idx_labels(labels));

    auto build = [&](const fs::path& out, int threads) {
        return run_cli("build --images " + images_path.string() + " --labels " +
                       labels_path.string() +
                       " --graph product --feature standard --source synthetic"
                       " --out " + out.string() + " --seed 5 --threads " +
                       std::to_string(threads) + " 2> /dev/null");
    };
    bool ok = build(dir / "a.cgds", 1) == 0;
    ok = build(dir / "b.cgds", 3) == 0 && ok;
    ok = build(dir / "c.cgds", 1) == 0 && ok;
    const bool build_match = ok &&
                             read_file_bytes(dir / "a.cgds") ==
                                 read_file_bytes(dir / "b.cgds") &&
                             read_file_bytes(dir / "a.cgds") ==
                                 read_file_bytes(dir / "c.cgds");

    auto train = [&](const fs::path& report, const fs::path& stdout_path) {
        return run_cli("train --train " + (dir / "a.cgds").string() + " --test " +
                       (dir / "a.cgds").string() + " --report " + report.string() +
                       " --layers 2 --width 8 --epochs 2 --batch 8 --seed 3 > " +
                       stdout_path.string() + " 2> /dev/null");
    };
    ok = train(dir / "r1.report", dir / "r1.out") == 0;
    ok = train(dir / "r2.report", dir / "r2.out") == 0 && ok;
    const bool train_match =
        ok &&
        read_file_bytes(dir / "r1.report") == read_file_bytes(dir / "r2.report") &&
        slurp(dir / "r1.out") == slurp(dir / "r2.out") &&
        slurp(dir / "r1.out").find("test_acc=") != std::string::npos;

    verdict(8, "cmd_build/cmd_train determinism", build_match && train_match,
            "(threads 1 vs 3 byte-identical; reports byte-identical)");
}

TEST_CASE("desk-scale ordering") {
    const fs::path data_dir(CORRGRAPH_DATA_DIR);
    ReproduceConfig config;
    config.data_dir = data_dir;
    config.out_dir = out_root() / "desk";
    config.seeds = {1, 2, 3};
    config.scale = "desk";
    config.threads = 1;

    std::string tsv;
    try {
        run_reproduce(config, std::cerr);
        tsv = slurp(config.out_dir / "rows.tsv");
    } catch (const Error& e) {
        std::fprintf(stderr, "reproduce run failed: %s\n", e.what());
    }

    // accs[dataset][graph_feature] -> accuracy per seed, in seed order.
    std::map<std::string, std::map<std::string, std::vector<double>>> accs;
    std::istringstream lines(tsv);
    std::string line;
    std::getline(lines, line); // header
    while (std::getline(lines, line)) {
        std::istringstream cols(line);
        std::string dataset, scale, graph, feature, seed, tr, te, ep, acc;
        std::getline(cols, dataset, '\t');
        std::getline(cols, scale, '\t');
        std::getline(cols, graph, '\t');
        std::getline(cols, feature, '\t');
        std::getline(cols, seed, '\t');
        std::getline(cols, tr, '\t');
        std::getline(cols, te, '\t');
        std::getline(cols, ep, '\t');
        std::getline(cols, acc, '\t');
        accs[dataset][graph + "_" + feature].push_back(std::strtod(acc.c_str(), nullptr));
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };

    {
        const auto& m = accs["mnist"];
        const bool have = m.count("product_correlation") && m.count("grid_pixel") &&
                          m.count("column_pixel") && m.count("row_pixel");
        double margin = 0.0;
        std::size_t col_wins = 0, seeds_n = 0;
        if (have) {
            margin = mean(m.at("product_correlation")) - mean(m.at("grid_pixel"));
            const auto& col = m.at("column_pixel");
            const auto& row = m.at("row_pixel");
            seeds_n = std::min(col.size(), row.size());
            for (std::size_t i = 0; i < seeds_n; ++i) col_wins += col[i] > row[i];
        }
        const bool ok = have && margin >= 0.15 && col_wins >= 2 && seeds_n == 3;
        char detail[128];
        std::snprintf(detail, sizeof detail,
                      "(product_corr-grid margin %.1fpp >= 15pp, column>row %zu/%zu)",
                      margin * 100.0, col_wins, seeds_n);
        verdict(1, "mnist desk-scale ordering", ok,
                have ? detail : "(no mnist rows; run scripts/prepare_data.py)");
    }
    {
        const auto& f = accs["fashion"];
        const bool have = f.count("product_correlation") && f.count("grid_pixel");
        double margin = 0.0;
        if (have)
            margin = mean(f.at("product_correlation")) - mean(f.at("grid_pixel"));
        const bool ok = have && margin >= 0.10;
        char detail[96];
        std::snprintf(detail, sizeof detail,
                      "(product_corr-grid margin %.1fpp >= 10pp)", margin * 100.0);
        verdict(2, "fashion desk-scale ordering", ok,
                have ? detail : "(no fashion rows; run scripts/prepare_data.py)");
    }
}
