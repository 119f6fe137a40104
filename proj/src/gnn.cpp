#include "corrgraph/gnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

namespace corrgraph {

namespace {

constexpr std::uint64_t kWeightStream = 100;  // + layer index
constexpr std::uint64_t kShuffleStream = 200; // + epoch index

void append_formatted(std::string& out, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += key;
    out += '=';
    out += buf;
    out += '\n';
}

} // namespace

Eigen::SparseMatrix<double> normalize_adjacency(const Eigen::MatrixXi& a) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw DimMismatch("adjacency matrix must be square");

    Eigen::VectorXd inv_sqrt_deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double d = 1.0; // the added identity
        for (Eigen::Index j = 0; j < n; ++j) d += a(i, j);
        inv_sqrt_deg(i) = 1.0 / std::sqrt(d);
    }

    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const int v = a(i, j) + (i == j ? 1 : 0);
            if (v != 0)
                trips.emplace_back(i, j, v * inv_sqrt_deg(i) * inv_sqrt_deg(j));
        }
    }
    Eigen::SparseMatrix<double> s(n, n);
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

Eigen::SparseMatrix<double> normalize_adjacency(std::uint32_t node_count,
                                                std::span<const EdgePair> edges) {
    const Eigen::Index n = node_count;
    Eigen::VectorXd deg = Eigen::VectorXd::Ones(n); // the added identity
    for (const EdgePair& e : edges) {
        if (e[0] >= node_count || e[1] >= node_count)
            throw CorruptRecord("edge endpoint out of range");
        if (e[0] > e[1]) throw CorruptRecord("edge pair not in canonical order");
        deg(e[0]) += 1.0;
        if (e[1] != e[0]) deg(e[1]) += 1.0;
    }
    Eigen::VectorXd inv_sqrt_deg = deg.array().rsqrt();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(edges.size() * 2 + static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        trips.emplace_back(i, i, inv_sqrt_deg(i) * inv_sqrt_deg(i));
    for (const EdgePair& e : edges) {
        const double v = inv_sqrt_deg(e[0]) * inv_sqrt_deg(e[1]);
        trips.emplace_back(e[0], e[1], v);
        if (e[0] != e[1]) trips.emplace_back(e[1], e[0], v);
    }
    Eigen::SparseMatrix<double> s(n, n);
    s.setFromTriplets(trips.begin(), trips.end()); // duplicates sum (self loops)
    return s;
}

struct GcnModel::Forward {
    Eigen::SparseMatrix<double> ahat;
    std::vector<Eigen::MatrixXd> h;      // h[0] = input features, h[l+1] = layer output
    std::vector<Eigen::MatrixXd> zhat;   // pre-activation after standardization
    std::vector<Eigen::RowVectorXd> inv_s;
    Eigen::RowVectorXd pooled;
    Eigen::RowVectorXd probs;
    double loss = 0.0;
    int pred = -1;
};

GcnModel::GcnModel(int input_dim, const GcnConfig& config)
    : input_dim_(input_dim), config_(config) {
    if (input_dim <= 0) throw InputError("feature dimension must be positive");
    if (config.widths.empty()) throw InputError("need at least one conv layer");
    if (config.classes < 2) throw InputError("need at least two classes");
    for (int w : config.widths)
        if (w <= 0) throw InputError("layer widths must be positive");

    auto glorot = [&](int in, int out, std::uint64_t stream) {
        Layer l;
        l.w.resize(in, out);
        const double limit =
            std::sqrt(6.0 / (in + out)) * config.weight_init_scale;
        Rng rng(derive_seed(config.seed, stream));
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) l.w(i, j) = rng.symmetric(limit);
        l.b = Eigen::RowVectorXd::Zero(out);
        return l;
    };
    auto zeros_like = [](const Layer& l) {
        Layer z;
        z.w = Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols());
        z.b = Eigen::RowVectorXd::Zero(l.b.cols());
        return z;
    };

    int in = input_dim;
    for (std::size_t l = 0; l < config.widths.size(); ++l) {
        conv_.push_back(glorot(in, config.widths[l], kWeightStream + l));
        in = config.widths[l];
    }
    out_ = glorot(in, config.classes, kWeightStream + config.widths.size());

    for (const Layer& l : conv_) {
        conv_grad_.push_back(zeros_like(l));
        conv_acc_.push_back(zeros_like(l));
        conv_m_.push_back(zeros_like(l));
        conv_v_.push_back(zeros_like(l));
    }
    out_grad_ = zeros_like(out_);
    out_acc_ = zeros_like(out_);
    out_m_ = zeros_like(out_);
    out_v_ = zeros_like(out_);
}

void GcnModel::forward(const GraphRecordView& g, Forward& f) const {
    if (static_cast<int>(g.feature_dim) != input_dim_)
        throw ShapeMismatch("graph feature dimension does not match the model");
    if (g.node_count == 0) throw InputError("graph has no nodes");
    if (g.features.size() !=
        static_cast<std::size_t>(g.node_count) * g.feature_dim)
        throw ShapeMismatch("feature buffer size does not match node count");

    const Eigen::Index n = g.node_count;
    f.ahat = normalize_adjacency(g.node_count, g.edges);

    const std::size_t layers = conv_.size();
    f.h.assign(layers + 1, {});
    f.zhat.assign(layers, {});
    f.inv_s.assign(layers, {});

    using RowMajorF =
        Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    f.h[0] = Eigen::Map<const RowMajorF>(g.features.data(), n, input_dim_)
                 .cast<double>();

    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = f.ahat * (f.h[l] * conv_[l].w);
        z.rowwise() += conv_[l].b;
        if (config_.column_standardize) {
            const Eigen::RowVectorXd mu = z.colwise().mean();
            z.rowwise() -= mu;
            const Eigen::RowVectorXd var = z.array().square().colwise().mean();
            f.inv_s[l] =
                (var.array() + config_.standardize_eps).rsqrt().matrix();
            z.array().rowwise() *= f.inv_s[l].array();
        } else {
            f.inv_s[l] = Eigen::RowVectorXd::Ones(z.cols());
        }
        f.zhat[l] = z;
        f.h[l + 1] = z.cwiseMax(0.0);
    }

    f.pooled = f.h[layers].colwise().mean();
    Eigen::RowVectorXd logits = f.pooled * out_.w + out_.b;

    const double peak = logits.maxCoeff();
    Eigen::RowVectorXd shifted = (logits.array() - peak).exp();
    const double total = shifted.sum();
    f.probs = shifted / total;
    f.loss = std::log(total) + peak - logits(g.label);

    f.pred = 0;
    for (int c = 1; c < config_.classes; ++c)
        if (logits(c) > logits(f.pred)) f.pred = c;
}

void GcnModel::backward(const GraphRecordView& g, const Forward& f) {
    const Eigen::Index n = g.node_count;
    const std::size_t layers = conv_.size();

    Eigen::RowVectorXd dlogits = f.probs;
    dlogits(g.label) -= 1.0;
    out_grad_.w = f.pooled.transpose() * dlogits;
    out_grad_.b = dlogits;

    const Eigen::RowVectorXd dpool = dlogits * out_.w.transpose();
    Eigen::MatrixXd dh(n, dpool.cols());
    dh.rowwise() = dpool / static_cast<double>(n);

    for (std::size_t li = layers; li-- > 0;) {
        // relu
        Eigen::MatrixXd dz =
            (f.zhat[li].array() > 0.0).select(dh, Eigen::MatrixXd::Zero(n, dh.cols()));
        // column standardization: dq = (dz - mean(dz) - zhat * mean(dz .* zhat)) / s
        if (config_.column_standardize) {
            const Eigen::RowVectorXd mdz = dz.colwise().mean();
            const Eigen::RowVectorXd mdzz =
                (dz.array() * f.zhat[li].array()).colwise().mean().matrix();
            dz.rowwise() -= mdz;
            dz.array() -= f.zhat[li].array().rowwise() * mdzz.array();
            dz.array().rowwise() *= f.inv_s[li].array();
        }
        conv_grad_[li].b = dz.colwise().sum();
        const Eigen::MatrixXd dm = f.ahat * dz; // ahat is symmetric
        conv_grad_[li].w = f.h[li].transpose() * dm;
        if (li > 0) dh = dm * conv_[li].w.transpose();
    }
}

void GcnModel::adam_step() {
    ++adam_t_;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    auto update = [&](auto& p, auto& m, auto& v, const auto& grad) {
        m = b1 * m + (1.0 - b1) * grad;
        v.array() = b2 * v.array() + (1.0 - b2) * grad.array().square();
        p.array() -= config_.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < conv_.size(); ++l) {
        update(conv_[l].w, conv_m_[l].w, conv_v_[l].w, conv_grad_[l].w);
        update(conv_[l].b, conv_m_[l].b, conv_v_[l].b, conv_grad_[l].b);
    }
    update(out_.w, out_m_.w, out_v_.w, out_grad_.w);
    update(out_.b, out_m_.b, out_v_.b, out_grad_.b);
}

double GcnModel::loss(const GraphRecordView& g) const {
    Forward f;
    forward(g, f);
    return f.loss;
}

int GcnModel::predict(const GraphRecordView& g) const {
    Forward f;
    forward(g, f);
    return f.pred;
}

namespace {

void flatten_into(std::vector<double>& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void flatten_into(std::vector<double>& out, const Eigen::RowVectorXd& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) out.push_back(v(j));
}

void unflatten_from(std::span<const double>& in, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = in.front();
            in = in.subspan(1);
        }
}

void unflatten_from(std::span<const double>& in, Eigen::RowVectorXd& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        v(j) = in.front();
        in = in.subspan(1);
    }
}

} // namespace

std::vector<double> GcnModel::gradient(const GraphRecordView& g) {
    Forward f;
    forward(g, f);
    backward(g, f);
    std::vector<double> flat;
    for (const Layer& l : conv_grad_) {
        flatten_into(flat, l.w);
        flatten_into(flat, l.b);
    }
    flatten_into(flat, out_grad_.w);
    flatten_into(flat, out_grad_.b);
    return flat;
}

GcnModel::StepResult GcnModel::train_step(const GraphRecordView& g) {
    Forward f;
    forward(g, f);
    backward(g, f);
    adam_step();
    return {f.loss, f.pred == g.label};
}

GcnModel::BatchResult GcnModel::train_batch(const GraphSource& source,
                                            std::span<const std::size_t> indices) {
    if (indices.empty()) throw InternalError("empty training batch");
    for (std::size_t l = 0; l < conv_.size(); ++l) {
        conv_acc_[l].w.setZero();
        conv_acc_[l].b.setZero();
    }
    out_acc_.w.setZero();
    out_acc_.b.setZero();

    BatchResult result{0.0, 0};
    Forward f;
    for (std::size_t idx : indices) {
        const GraphRecordView g = source.get(idx);
        forward(g, f);
        backward(g, f);
        result.loss_sum += f.loss;
        result.correct += f.pred == g.label;
        for (std::size_t l = 0; l < conv_.size(); ++l) {
            conv_acc_[l].w += conv_grad_[l].w;
            conv_acc_[l].b += conv_grad_[l].b;
        }
        out_acc_.w += out_grad_.w;
        out_acc_.b += out_grad_.b;
    }

    const double inv = 1.0 / static_cast<double>(indices.size());
    for (std::size_t l = 0; l < conv_.size(); ++l) {
        conv_grad_[l].w = conv_acc_[l].w * inv;
        conv_grad_[l].b = conv_acc_[l].b * inv;
    }
    out_grad_.w = out_acc_.w * inv;
    out_grad_.b = out_acc_.b * inv;
    adam_step();
    return result;
}

std::vector<double> GcnModel::parameters() const {
    std::vector<double> flat;
    for (const Layer& l : conv_) {
        flatten_into(flat, l.w);
        flatten_into(flat, l.b);
    }
    flatten_into(flat, out_.w);
    flatten_into(flat, out_.b);
    return flat;
}

void GcnModel::set_parameters(std::span<const double> flat) {
    std::span<const double> in = flat;
    for (Layer& l : conv_) {
        unflatten_from(in, l.w);
        unflatten_from(in, l.b);
    }
    unflatten_from(in, out_.w);
    unflatten_from(in, out_.b);
    if (!in.empty()) throw ShapeMismatch("parameter vector has trailing values");
}

double evaluate(const GcnModel& model, const GraphSource& source) {
    const std::size_t count = source.size();
    if (count == 0) throw EmptyDataset("evaluation set is empty");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const GraphRecordView g = source.get(i);
        correct += model.predict(g) == static_cast<int>(g.label);
    }
    return static_cast<double>(correct) / static_cast<double>(count);
}

TrainReport train_and_evaluate(const GraphSource& train, const GraphSource& test,
                               const GcnConfig& config) {
    if (train.size() == 0) throw EmptyDataset("training set is empty");
    if (config.batch_size < 1) throw InputError("batch size must be positive");

    const auto started = std::chrono::steady_clock::now();
    GcnModel model(static_cast<int>(train.get(0).feature_dim), config);
    TrainReport report;
    report.config = config;
    report.input_dim = model.input_dim();
    report.train_count = train.size();
    report.test_count = test.size();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, kShuffleStream + epoch));
        shuffle(std::span<std::size_t>(order), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t at = 0; at < order.size(); at += batch) {
            const std::size_t take = std::min(batch, order.size() - at);
            const auto r = model.train_batch(
                train, std::span<const std::size_t>(order).subspan(at, take));
            loss_sum += r.loss_sum;
            correct += r.correct;
        }
        report.epochs.push_back(
            {loss_sum / static_cast<double>(train.size()),
             static_cast<double>(correct) / static_cast<double>(train.size())});
    }
    report.test_accuracy = evaluate(model, test);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return report;
}

std::string serialize_report(const TrainReport& report) {
    std::string out = "corrgraph train report v1\n";
    out += "widths=";
    for (std::size_t i = 0; i < report.config.widths.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(report.config.widths[i]);
    }
    out += '\n';
    out += "classes=" + std::to_string(report.config.classes) + '\n';
    append_formatted(out, "learning_rate", report.config.learning_rate);
    append_formatted(out, "weight_init_scale", report.config.weight_init_scale);
    out += "column_standardize=";
    out += report.config.column_standardize ? '1' : '0';
    out += '\n';
    append_formatted(out, "standardize_eps", report.config.standardize_eps);
    out += "epochs=" + std::to_string(report.config.epochs) + '\n';
    out += "batch_size=" + std::to_string(report.config.batch_size) + '\n';
    out += "seed=" + std::to_string(report.config.seed) + '\n';
    out += "input_dim=" + std::to_string(report.input_dim) + '\n';
    out += "train_count=" + std::to_string(report.train_count) + '\n';
    out += "test_count=" + std::to_string(report.test_count) + '\n';
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "epoch %zu loss=%.17g train_acc=%.17g\n",
                      e, report.epochs[e].mean_loss,
                      report.epochs[e].train_accuracy);
        out += buf;
    }
    append_formatted(out, "test_acc", report.test_accuracy);
    return out;
}

} // namespace corrgraph
