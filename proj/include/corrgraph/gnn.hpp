#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "corrgraph/errors.hpp"
#include "corrgraph/rng.hpp"

namespace corrgraph {

// One undirected edge, stored once with first <= second. A pair (i, i) is a
// self-loop.
using EdgePair = std::array<std::uint32_t, 2>;

// Non-owning view of one training graph. `features` is row-major
// node_count x feature_dim, matching the on-disk record layout so mapped
// datasets can hand out views without copying.
struct GraphRecordView {
    std::uint32_t node_count = 0;
    std::uint32_t feature_dim = 0;
    std::uint8_t label = 0;
    std::span<const EdgePair> edges;
    std::span<const float> features;
};

// Anything that can hand out graphs by index: an in-memory vector of records
// or a memory-mapped dataset file.
class GraphSource {
public:
    virtual ~GraphSource() = default;
    virtual std::size_t size() const = 0;
    virtual GraphRecordView get(std::size_t i) const = 0;
};

// Owning record + a simple vector-backed source, used by tests and by the
// small-scale training path.
struct GraphRecord {
    std::uint32_t node_count = 0;
    std::uint32_t feature_dim = 0;
    std::uint8_t label = 0;
    std::vector<EdgePair> edges;
    std::vector<float> features; // row-major node_count x feature_dim

    GraphRecordView view() const {
        return {node_count, feature_dim, label, edges, features};
    }
};

class MemoryGraphSource final : public GraphSource {
public:
    explicit MemoryGraphSource(std::vector<GraphRecord> records)
        : records_(std::move(records)) {}

    std::size_t size() const override { return records_.size(); }
    GraphRecordView get(std::size_t i) const override { return records_[i].view(); }

private:
    std::vector<GraphRecord> records_;
};

// Symmetric renormalized adjacency D^-1/2 (A + I) D^-1/2.
Eigen::SparseMatrix<double> normalize_adjacency(const Eigen::MatrixXi& a);
Eigen::SparseMatrix<double> normalize_adjacency(std::uint32_t node_count,
                                                std::span<const EdgePair> edges);

struct GcnConfig {
    std::vector<int> widths{64, 64, 64}; // conv layer output widths
    int classes = 10;
    double learning_rate = 1e-3;
    double weight_init_scale = 1.0;
    bool column_standardize = true; // per-graph per-column standardization
    double standardize_eps = 1e-5;
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 1;
};

// Graph convolution stack: H_{l+1} = relu(std(Ahat H_l W_l + b_l)), followed
// by global mean pooling and a dense softmax classifier. Trained one graph at
// a time with Adam. All randomness flows from config.seed, so identical
// inputs give bitwise-identical parameters and reports.
class GcnModel {
public:
    GcnModel(int input_dim, const GcnConfig& config);

    // Forward pass only.
    double loss(const GraphRecordView& g) const;
    int predict(const GraphRecordView& g) const;

    // Forward + backward; fills the internal gradient buffer and returns it
    // flattened in parameter order. No update.
    std::vector<double> gradient(const GraphRecordView& g);

    // One Adam step on a single graph. Returns the pre-update loss and
    // whether the pre-update prediction was correct.
    struct StepResult {
        double loss;
        bool correct;
    };
    StepResult train_step(const GraphRecordView& g);

    // One Adam step on the mean gradient over a mini-batch, graphs evaluated
    // in the given order. Returns summed loss and correct count.
    struct BatchResult {
        double loss_sum;
        std::size_t correct;
    };
    BatchResult train_batch(const GraphSource& source,
                            std::span<const std::size_t> indices);

    // Flattened parameters, in a fixed order (conv W/b per layer, then the
    // output layer). Used by the finite-difference tests.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    int input_dim() const { return input_dim_; }

private:
    struct Layer {
        Eigen::MatrixXd w;
        Eigen::RowVectorXd b;
    };
    struct Forward; // per-graph intermediates

    void forward(const GraphRecordView& g, Forward& f) const;
    void backward(const GraphRecordView& g, const Forward& f);
    void adam_step();

    int input_dim_;
    GcnConfig config_;
    std::vector<Layer> conv_;
    Layer out_;

    // Gradients, batch accumulators, and Adam moments, parameter shapes.
    std::vector<Layer> conv_grad_;
    Layer out_grad_;
    std::vector<Layer> conv_acc_;
    Layer out_acc_;
    std::vector<Layer> conv_m_, conv_v_;
    Layer out_m_, out_v_;
    std::int64_t adam_t_ = 0;
};

struct EpochStats {
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainReport {
    GcnConfig config;
    int input_dim = 0;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::vector<EpochStats> epochs;
    double test_accuracy = 0.0;
    // Informational only; serialize_report leaves it out so report files stay
    // byte-identical across reruns.
    double wall_clock_seconds = 0.0;
};

// Shuffled per-graph training for config.epochs epochs, then one evaluation
// pass over `test`. Epoch order comes from derive_seed(config.seed, ...), so
// reruns match byte for byte.
TrainReport train_and_evaluate(const GraphSource& train, const GraphSource& test,
                               const GcnConfig& config);

double evaluate(const GcnModel& model, const GraphSource& source);

// Deterministic text form of a report (doubles printed with %.17g). Wall
// clock never appears here; reruns of the same command produce identical
// bytes.
std::string serialize_report(const TrainReport& report);

} // namespace corrgraph
