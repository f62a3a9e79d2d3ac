#include "sequence_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "activations.hpp"
#include "errors.hpp"
#include "hashing.hpp"

namespace sentibench {

const char* variant_name(BiLstmVariant v) {
    return v == BiLstmVariant::plain ? "bilstm" : "bilstm-attn";
}

BiLstmVariant variant_from_name(const std::string& name) {
    if (name == "bilstm") return BiLstmVariant::plain;
    if (name == "bilstm-attn") return BiLstmVariant::attention;
    throw ConfigError("unknown model variant '" + name + "' (expected bilstm or bilstm-attn)");
}

void DlTrainConfig::validate() const {
    if (vocab_size < 3) throw ConfigError("vocab_size must leave room beyond <pad>/<unk>");
    if (embedding_dim < 1 || hidden_dim < 1) throw ConfigError("model dimensions must be positive");
    if (layers != 1) throw ConfigError("only single-layer BiLSTMs are supported");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    if (max_len < 1 || batch_size < 1) throw ConfigError("max_len and batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (epochs < 1 || patience < 1) throw ConfigError("epochs and patience must be >= 1");
}

// ---------------------------------------------------------------------------
// parameter plumbing

namespace {

void cell_refs(const std::string& prefix, LstmCellParams& c, std::vector<TensorRef>& out) {
    auto add = [&](const char* name, double* data, std::ptrdiff_t size) {
        out.push_back({prefix + name, data, size});
    };
    add("w_forget", c.w_forget.data(), c.w_forget.size());
    add("w_input", c.w_input.data(), c.w_input.size());
    add("w_output", c.w_output.data(), c.w_output.size());
    add("w_cell", c.w_cell.data(), c.w_cell.size());
    add("u_forget", c.u_forget.data(), c.u_forget.size());
    add("u_input", c.u_input.data(), c.u_input.size());
    add("u_output", c.u_output.data(), c.u_output.size());
    add("u_cell", c.u_cell.data(), c.u_cell.size());
    add("b_forget", c.b_forget.data(), c.b_forget.size());
    add("b_input", c.b_input.data(), c.b_input.size());
    add("b_output", c.b_output.data(), c.b_output.size());
    add("b_cell", c.b_cell.data(), c.b_cell.size());
}

template <typename ModelLike>
std::vector<TensorRef> collect_refs(ModelLike& m) {
    std::vector<TensorRef> refs;
    refs.push_back({"embedding", m.embedding.data(), m.embedding.size()});
    cell_refs("forward.", m.forward_cell, refs);
    cell_refs("backward.", m.backward_cell, refs);
    if (!m.attention.empty()) {
        refs.push_back({"attention.w", m.attention.w.data(), m.attention.w.size()});
        refs.push_back({"attention.b", m.attention.b.data(), m.attention.b.size()});
        refs.push_back({"attention.v", m.attention.v.data(), m.attention.v.size()});
    }
    refs.push_back({"classifier.w", m.classifier.w.data(), m.classifier.w.size()});
    refs.push_back({"classifier.b", &m.classifier.bias, 1});
    return refs;
}

LstmCellParams zero_cell(Eigen::Index hidden, Eigen::Index input) {
    LstmCellParams c;
    for (Matrix* w : {&c.w_forget, &c.w_input, &c.w_output, &c.w_cell}) {
        *w = Matrix::Zero(hidden, input);
    }
    for (Matrix* u : {&c.u_forget, &c.u_input, &c.u_output, &c.u_cell}) {
        *u = Matrix::Zero(hidden, hidden);
    }
    for (Vector* b : {&c.b_forget, &c.b_input, &c.b_output, &c.b_cell}) {
        *b = Vector::Zero(hidden);
    }
    return c;
}

// row-major traversal so the draw order is part of the pinned init scheme
void fill_uniform(Matrix& m, double lo, double hi, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.next_double(lo, hi);
    }
}

void fill_uniform(Vector& v, double lo, double hi, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.next_double(lo, hi);
}

} // namespace

std::vector<TensorRef> tensor_refs(BiLstmModel& m) { return collect_refs(m); }
std::vector<TensorRef> tensor_refs(BiLstmGradients& g) { return collect_refs(g); }

BiLstmModel init_bilstm(const DlTrainConfig& cfg, BiLstmVariant variant, Rng& rng) {
    const Eigen::Index vocab = static_cast<Eigen::Index>(cfg.vocab_size);
    const Eigen::Index e = cfg.embedding_dim;
    const Eigen::Index h = cfg.hidden_dim;

    BiLstmModel m;
    m.variant = variant;
    m.dropout_rate = cfg.dropout;

    m.embedding = Matrix::Zero(vocab, e);
    for (Eigen::Index r = 1; r < vocab; ++r) { // row 0 is <pad>, kept zero
        for (Eigen::Index c = 0; c < e; ++c) m.embedding(r, c) = rng.next_double(-0.1, 0.1);
    }

    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    auto init_cell = [&](LstmCellParams& cell) {
        cell = zero_cell(h, e);
        for (Matrix* w : {&cell.w_forget, &cell.w_input, &cell.w_output, &cell.w_cell}) {
            fill_uniform(*w, -bound, bound, rng);
        }
        for (Matrix* u : {&cell.u_forget, &cell.u_input, &cell.u_output, &cell.u_cell}) {
            fill_uniform(*u, -bound, bound, rng);
        }
        // biases stay zero
    };
    init_cell(m.forward_cell);
    init_cell(m.backward_cell);

    if (variant == BiLstmVariant::attention) {
        m.attention.w = Matrix(h, 2 * h);
        fill_uniform(m.attention.w, -bound, bound, rng);
        m.attention.b = Vector::Zero(h);
        m.attention.v = Vector(h);
        fill_uniform(m.attention.v, -bound, bound, rng);
    }

    m.classifier.w = Vector(2 * h);
    fill_uniform(m.classifier.w, -bound, bound, rng);
    m.classifier.bias = 0.0;
    return m;
}

BiLstmGradients zero_gradients_like(const BiLstmModel& m) {
    BiLstmGradients g;
    g.embedding = Matrix::Zero(m.embedding.rows(), m.embedding.cols());
    g.forward_cell = zero_cell(m.hidden_dim(), m.embedding_dim());
    g.backward_cell = zero_cell(m.hidden_dim(), m.embedding_dim());
    if (!m.attention.empty()) {
        g.attention.w = Matrix::Zero(m.attention.w.rows(), m.attention.w.cols());
        g.attention.b = Vector::Zero(m.attention.b.size());
        g.attention.v = Vector::Zero(m.attention.v.size());
    }
    g.classifier.w = Vector::Zero(m.classifier.w.size());
    g.classifier.bias = 0.0;
    return g;
}

// ---------------------------------------------------------------------------
// batching

PaddedBatch encode_batch(std::span<const LabeledDocument> docs, const Vocabulary& vocab,
                         int max_len) {
    if (vocab.reserved != 2) throw ConfigError("encode_batch needs a vocabulary with <pad>/<unk> ids");

    const Eigen::Index b_size = static_cast<Eigen::Index>(docs.size());
    PaddedBatch batch;
    batch.token_ids.setConstant(b_size, max_len, static_cast<std::int32_t>(kPadId));
    batch.mask = Matrix::Zero(b_size, max_len);
    batch.labels.reserve(docs.size());
    batch.lengths.reserve(docs.size());

    for (Eigen::Index b = 0; b < b_size; ++b) {
        const auto& doc = docs[static_cast<std::size_t>(b)];
        batch.labels.push_back(doc.label);
        int len = 0;
        for (const auto& token : doc.tokens) {
            if (len >= max_len) break; // keep the first max_len tokens
            const std::int64_t idx = vocab.index_of(token);
            batch.token_ids(b, len) = idx >= 0 ? static_cast<std::int32_t>(idx)
                                               : static_cast<std::int32_t>(kUnkId);
            batch.mask(b, len) = 1.0;
            ++len;
        }
        if (len == 0) { // cleaned down to nothing: stand in a single <unk>
            batch.token_ids(b, 0) = static_cast<std::int32_t>(kUnkId);
            batch.mask(b, 0) = 1.0;
            len = 1;
            ++batch.empty_replaced;
        }
        batch.lengths.push_back(len);
    }
    return batch;
}

// ---------------------------------------------------------------------------
// forward

CellStep lstm_cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                           const LstmCellParams& p) {
    auto gate = [&](const Matrix& w, const Matrix& u, const Vector& b) {
        return ((x * w.transpose() + h_prev * u.transpose()).rowwise() + b.transpose()).eval();
    };
    auto logistic = [](double z) { return sigmoid(z); };
    CellStep s;
    s.f = gate(p.w_forget, p.u_forget, p.b_forget).unaryExpr(logistic);
    s.i = gate(p.w_input, p.u_input, p.b_input).unaryExpr(logistic);
    s.o = gate(p.w_output, p.u_output, p.b_output).unaryExpr(logistic);
    s.g = gate(p.w_cell, p.u_cell, p.b_cell).array().tanh().matrix();
    s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
    s.tanh_c = s.c.array().tanh().matrix();
    s.h = (s.o.array() * s.tanh_c.array()).matrix();
    if (!s.h.allFinite()) throw NumericError("non-finite LSTM activations");
    return s;
}

namespace {

Matrix gather_embeddings(const PaddedBatch& batch, const Matrix& embedding, Eigen::Index t) {
    Matrix x(batch.rows(), embedding.cols());
    for (Eigen::Index b = 0; b < batch.rows(); ++b) {
        x.row(b) = embedding.row(batch.token_ids(b, t));
    }
    return x;
}

// scan one direction over all positions, applying the per-row carry at
// padded steps so the state at real positions is pad-count independent
void scan_direction(const PaddedBatch& batch, const Matrix& embedding, const LstmCellParams& cell,
                    bool reverse, BiLstmForward::DirectionCache& cache) {
    const Eigen::Index b_size = batch.rows();
    const Eigen::Index len = batch.max_len();
    const Eigen::Index hidden = cell.b_forget.size();

    cache.steps.resize(static_cast<std::size_t>(len));
    Matrix h_prev = Matrix::Zero(b_size, hidden);
    Matrix c_prev = Matrix::Zero(b_size, hidden);

    for (Eigen::Index s = 0; s < len; ++s) {
        const Eigen::Index t = reverse ? len - 1 - s : s;
        const Matrix x = gather_embeddings(batch, embedding, t);
        CellStep step = lstm_cell_forward(x, h_prev, c_prev, cell);

        const auto m = batch.mask.col(t).array();
        step.h = (step.h.array().colwise() * m).matrix() +
                 (h_prev.array().colwise() * (1.0 - m)).matrix();
        step.c = (step.c.array().colwise() * m).matrix() +
                 (c_prev.array().colwise() * (1.0 - m)).matrix();

        h_prev = step.h;
        c_prev = step.c;
        cache.steps[static_cast<std::size_t>(t)] = std::move(step);
    }
}

} // namespace

AttentionResult attention_pool(const std::vector<Matrix>& hidden, const Matrix& mask,
                               const AttentionParams& p) {
    const Eigen::Index b_size = mask.rows();
    const Eigen::Index len = mask.cols();
    if ((mask.rowwise().sum().array() < 1.0).any()) {
        throw DataError("attention_pool: every row needs at least one real position");
    }

    AttentionResult r;
    r.tanh_pre.resize(static_cast<std::size_t>(len));
    Matrix scores(b_size, len);
    for (Eigen::Index t = 0; t < len; ++t) {
        Matrix pre = (hidden[static_cast<std::size_t>(t)] * p.w.transpose()).rowwise() + p.b.transpose();
        Matrix tanh_pre = pre.array().tanh().matrix();
        scores.col(t) = tanh_pre * p.v;
        r.tanh_pre[static_cast<std::size_t>(t)] = std::move(tanh_pre);
    }

    // masked softmax with max subtraction, real positions only
    r.alpha = Matrix::Zero(b_size, len);
    for (Eigen::Index b = 0; b < b_size; ++b) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < len; ++t) {
            if (mask(b, t) != 0.0) max_score = std::max(max_score, scores(b, t));
        }
        double denom = 0.0;
        for (Eigen::Index t = 0; t < len; ++t) {
            if (mask(b, t) != 0.0) {
                const double e = std::exp(scores(b, t) - max_score);
                r.alpha(b, t) = e;
                denom += e;
            }
        }
        r.alpha.row(b) /= denom;
    }

    const Eigen::Index width = hidden.empty() ? 0 : hidden[0].cols();
    r.context = Matrix::Zero(b_size, width);
    for (Eigen::Index t = 0; t < len; ++t) {
        r.context += (hidden[static_cast<std::size_t>(t)].array().colwise() * r.alpha.col(t).array())
                         .matrix();
    }
    return r;
}

Vector classify(const Matrix& pooled, const ClassifierHead& head) {
    return ((pooled * head.w).array() + head.bias).matrix();
}

BiLstmForward bilstm_forward(const PaddedBatch& batch, const BiLstmModel& m, bool training,
                             Rng* dropout_rng) {
    const Eigen::Index b_size = batch.rows();
    const Eigen::Index len = batch.max_len();
    const Eigen::Index hidden = m.hidden_dim();

    BiLstmForward fw;
    scan_direction(batch, m.embedding, m.forward_cell, /*reverse=*/false, fw.fwd);
    scan_direction(batch, m.embedding, m.backward_cell, /*reverse=*/true, fw.bwd);

    const bool use_dropout = training && m.dropout_rate > 0.0;
    if (use_dropout && dropout_rng == nullptr) {
        throw ConfigError("training forward pass with dropout needs an RNG");
    }
    const double keep = 1.0 - m.dropout_rate;

    fw.step_output.resize(static_cast<std::size_t>(len));
    if (use_dropout) fw.dropout_mask.resize(static_cast<std::size_t>(len));
    for (Eigen::Index t = 0; t < len; ++t) {
        Matrix out(b_size, 2 * hidden);
        out.leftCols(hidden) = fw.fwd.steps[static_cast<std::size_t>(t)].h;
        out.rightCols(hidden) = fw.bwd.steps[static_cast<std::size_t>(t)].h;
        out = (out.array().colwise() * batch.mask.col(t).array()).matrix();
        if (use_dropout) {
            Matrix& dm = fw.dropout_mask[static_cast<std::size_t>(t)];
            dm.resize(b_size, 2 * hidden);
            for (Eigen::Index r = 0; r < b_size; ++r) {
                for (Eigen::Index c = 0; c < 2 * hidden; ++c) {
                    dm(r, c) = dropout_rng->next_double() < keep ? 1.0 / keep : 0.0;
                }
            }
            out = out.cwiseProduct(dm);
        }
        fw.step_output[static_cast<std::size_t>(t)] = std::move(out);
    }

    if (m.variant == BiLstmVariant::attention) {
        AttentionResult att = attention_pool(fw.step_output, batch.mask, m.attention);
        fw.pooled = std::move(att.context);
        fw.alpha = std::move(att.alpha);
        fw.attn_tanh = std::move(att.tanh_pre);
    } else {
        // final-states readout: forward direction at the last real position,
        // backward direction at position 0
        fw.pooled.resize(b_size, 2 * hidden);
        for (Eigen::Index b = 0; b < b_size; ++b) {
            const Eigen::Index last = batch.lengths[static_cast<std::size_t>(b)] - 1;
            fw.pooled.row(b).head(hidden) =
                fw.step_output[static_cast<std::size_t>(last)].row(b).head(hidden);
            fw.pooled.row(b).tail(hidden) = fw.step_output[0].row(b).tail(hidden);
        }
    }
    fw.logits = classify(fw.pooled, m.classifier);
    return fw;
}

Vector forward_logits(const PaddedBatch& batch, const BiLstmModel& m) {
    return bilstm_forward(batch, m, /*training=*/false, nullptr).logits;
}

// ---------------------------------------------------------------------------
// backward

namespace {

double mean_bce_from_logits(const Vector& logits, const std::vector<int>& labels) {
    double total = 0.0;
    for (Eigen::Index b = 0; b < logits.size(); ++b) {
        const double z = logits(b);
        const double y = static_cast<double>(labels[static_cast<std::size_t>(b)]);
        total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(logits.size());
}

struct DirectionGrads {
    std::vector<Matrix> d_step_h; // grad wrt this direction's post-carry h per position
};

// reverse scan through one direction; d_h_step[t] carries the per-step
// output gradient for this direction's half
void backward_direction(const PaddedBatch& batch, const Matrix& embedding,
                        const LstmCellParams& cell, bool reverse,
                        const BiLstmForward::DirectionCache& cache,
                        const std::vector<Matrix>& d_step_h, LstmCellParams& d_cell,
                        Matrix& d_embedding) {
    const Eigen::Index b_size = batch.rows();
    const Eigen::Index len = batch.max_len();
    const Eigen::Index hidden = cell.b_forget.size();

    Matrix d_h_chain = Matrix::Zero(b_size, hidden);
    Matrix d_c_chain = Matrix::Zero(b_size, hidden);

    for (Eigen::Index s = len - 1; s >= 0; --s) {
        const Eigen::Index t = reverse ? len - 1 - s : s;
        const auto& step = cache.steps[static_cast<std::size_t>(t)];
        const auto m = batch.mask.col(t).array();

        // previous post-carry state in scan order (zero at the scan start)
        const Eigen::Index prev_t = reverse ? t + 1 : t - 1;
        const bool has_prev = prev_t >= 0 && prev_t < len;
        const Matrix h_prev = has_prev ? cache.steps[static_cast<std::size_t>(prev_t)].h
                                       : Matrix::Zero(b_size, hidden);
        const Matrix c_prev = has_prev ? cache.steps[static_cast<std::size_t>(prev_t)].c
                                       : Matrix::Zero(b_size, hidden);

        const Matrix d_h_total = d_step_h[static_cast<std::size_t>(t)] + d_h_chain;

        // carry select: masked rows pass gradients straight through
        const Matrix d_h_raw = (d_h_total.array().colwise() * m).matrix();
        const Matrix d_h_carry = (d_h_total.array().colwise() * (1.0 - m)).matrix();
        const Matrix d_c_sel = (d_c_chain.array().colwise() * m).matrix();
        const Matrix d_c_carry = (d_c_chain.array().colwise() * (1.0 - m)).matrix();

        const Matrix d_o = d_h_raw.cwiseProduct(step.tanh_c);
        const Matrix d_c_raw =
            d_c_sel +
            (d_h_raw.array() * step.o.array() * (1.0 - step.tanh_c.array().square())).matrix();

        const Matrix d_f = d_c_raw.cwiseProduct(c_prev);
        const Matrix d_i = d_c_raw.cwiseProduct(step.g);
        const Matrix d_g = d_c_raw.cwiseProduct(step.i);
        const Matrix d_c_prev_cell = d_c_raw.cwiseProduct(step.f);

        const Matrix d_zf = (d_f.array() * step.f.array() * (1.0 - step.f.array())).matrix();
        const Matrix d_zi = (d_i.array() * step.i.array() * (1.0 - step.i.array())).matrix();
        const Matrix d_zo = (d_o.array() * step.o.array() * (1.0 - step.o.array())).matrix();
        const Matrix d_zg = (d_g.array() * (1.0 - step.g.array().square())).matrix();

        const Matrix x = gather_embeddings(batch, embedding, t);
        d_cell.w_forget.noalias() += d_zf.transpose() * x;
        d_cell.w_input.noalias() += d_zi.transpose() * x;
        d_cell.w_output.noalias() += d_zo.transpose() * x;
        d_cell.w_cell.noalias() += d_zg.transpose() * x;
        d_cell.u_forget.noalias() += d_zf.transpose() * h_prev;
        d_cell.u_input.noalias() += d_zi.transpose() * h_prev;
        d_cell.u_output.noalias() += d_zo.transpose() * h_prev;
        d_cell.u_cell.noalias() += d_zg.transpose() * h_prev;
        d_cell.b_forget += d_zf.colwise().sum().transpose();
        d_cell.b_input += d_zi.colwise().sum().transpose();
        d_cell.b_output += d_zo.colwise().sum().transpose();
        d_cell.b_cell += d_zg.colwise().sum().transpose();

        const Matrix d_x = d_zf * cell.w_forget + d_zi * cell.w_input + d_zo * cell.w_output +
                           d_zg * cell.w_cell;
        for (Eigen::Index b = 0; b < b_size; ++b) {
            const std::int32_t token = batch.token_ids(b, t);
            if (token != static_cast<std::int32_t>(kPadId)) {
                d_embedding.row(token) += d_x.row(b);
            }
        }

        d_h_chain = d_zf * cell.u_forget + d_zi * cell.u_input + d_zo * cell.u_output +
                    d_zg * cell.u_cell + d_h_carry;
        d_c_chain = d_c_prev_cell + d_c_carry;
    }
}

} // namespace

LossAndGradients loss_and_backward(const PaddedBatch& batch, const BiLstmModel& m, bool training,
                                   Rng* dropout_rng) {
    const Eigen::Index b_size = batch.rows();
    const Eigen::Index len = batch.max_len();
    const Eigen::Index hidden = m.hidden_dim();

    BiLstmForward fw = bilstm_forward(batch, m, training, dropout_rng);

    LossAndGradients out;
    out.loss = mean_bce_from_logits(fw.logits, batch.labels);
    if (!std::isfinite(out.loss)) throw NumericError("non-finite training loss");
    out.grads = zero_gradients_like(m);

    // head
    Vector d_logits(b_size);
    for (Eigen::Index b = 0; b < b_size; ++b) {
        const double y = static_cast<double>(batch.labels[static_cast<std::size_t>(b)]);
        d_logits(b) = (sigmoid(fw.logits(b)) - y) / static_cast<double>(b_size);
    }
    out.grads.classifier.w = fw.pooled.transpose() * d_logits;
    out.grads.classifier.bias = d_logits.sum();
    const Matrix d_pooled = d_logits * m.classifier.w.transpose(); // B x 2H

    // pooling
    std::vector<Matrix> d_step(static_cast<std::size_t>(len));
    for (auto& d : d_step) d = Matrix::Zero(b_size, 2 * hidden);

    if (m.variant == BiLstmVariant::attention) {
        // d_alpha and the softmax backward, then the score network
        Matrix d_alpha = Matrix::Zero(b_size, len);
        for (Eigen::Index t = 0; t < len; ++t) {
            const Matrix& h_t = fw.step_output[static_cast<std::size_t>(t)];
            d_alpha.col(t) = (d_pooled.cwiseProduct(h_t)).rowwise().sum();
            d_step[static_cast<std::size_t>(t)] +=
                (d_pooled.array().colwise() * fw.alpha.col(t).array()).matrix();
        }
        Matrix d_scores(b_size, len);
        const Vector row_dot = (d_alpha.cwiseProduct(fw.alpha)).rowwise().sum();
        for (Eigen::Index t = 0; t < len; ++t) {
            d_scores.col(t) = fw.alpha.col(t).cwiseProduct(d_alpha.col(t) - row_dot);
        }
        for (Eigen::Index t = 0; t < len; ++t) {
            const Matrix& tanh_pre = fw.attn_tanh[static_cast<std::size_t>(t)];
            const Matrix& h_t = fw.step_output[static_cast<std::size_t>(t)];
            out.grads.attention.v.noalias() += tanh_pre.transpose() * d_scores.col(t);
            const Matrix d_pre = ((d_scores.col(t) * m.attention.v.transpose()).array() *
                                  (1.0 - tanh_pre.array().square()))
                                     .matrix();
            out.grads.attention.w.noalias() += d_pre.transpose() * h_t;
            out.grads.attention.b += d_pre.colwise().sum().transpose();
            d_step[static_cast<std::size_t>(t)] += d_pre * m.attention.w;
        }
    } else {
        for (Eigen::Index b = 0; b < b_size; ++b) {
            const Eigen::Index last = batch.lengths[static_cast<std::size_t>(b)] - 1;
            d_step[static_cast<std::size_t>(last)].row(b).head(hidden) += d_pooled.row(b).head(hidden);
            d_step[0].row(b).tail(hidden) += d_pooled.row(b).tail(hidden);
        }
    }

    // dropout and mask-zeroing, then split per direction
    std::vector<Matrix> d_fwd_h(static_cast<std::size_t>(len));
    std::vector<Matrix> d_bwd_h(static_cast<std::size_t>(len));
    for (Eigen::Index t = 0; t < len; ++t) {
        Matrix d_out = std::move(d_step[static_cast<std::size_t>(t)]);
        if (!fw.dropout_mask.empty()) {
            d_out = d_out.cwiseProduct(fw.dropout_mask[static_cast<std::size_t>(t)]);
        }
        d_out = (d_out.array().colwise() * batch.mask.col(t).array()).matrix();
        d_fwd_h[static_cast<std::size_t>(t)] = d_out.leftCols(hidden);
        d_bwd_h[static_cast<std::size_t>(t)] = d_out.rightCols(hidden);
    }

    backward_direction(batch, m.embedding, m.forward_cell, /*reverse=*/false, fw.fwd, d_fwd_h,
                       out.grads.forward_cell, out.grads.embedding);
    backward_direction(batch, m.embedding, m.backward_cell, /*reverse=*/true, fw.bwd, d_bwd_h,
                       out.grads.backward_cell, out.grads.embedding);

    out.grads.embedding.row(kPadId).setZero();
    return out;
}

// ---------------------------------------------------------------------------
// optimizer

AdamState AdamState::for_model(BiLstmModel& m) {
    AdamState s;
    for (const auto& ref : tensor_refs(m)) {
        s.first_moment.emplace_back(static_cast<std::size_t>(ref.size), 0.0);
        s.second_moment.emplace_back(static_cast<std::size_t>(ref.size), 0.0);
    }
    return s;
}

void adam_step(BiLstmModel& params, BiLstmGradients& grads, AdamState& state, double lr) {
    auto p_refs = tensor_refs(params);
    auto g_refs = tensor_refs(grads);
    if (p_refs.size() != g_refs.size() || p_refs.size() != state.first_moment.size()) {
        throw ConfigError("Adam state does not match the model's tensor layout");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t k = 0; k < p_refs.size(); ++k) {
        if (p_refs[k].size != g_refs[k].size ||
            static_cast<std::size_t>(p_refs[k].size) != state.first_moment[k].size()) {
            throw ConfigError("Adam state shape mismatch for tensor " + p_refs[k].name);
        }
        double* p = p_refs[k].data;
        const double* g = g_refs[k].data;
        double* m1 = state.first_moment[k].data();
        double* m2 = state.second_moment[k].data();
        for (std::ptrdiff_t i = 0; i < p_refs[k].size; ++i) {
            m1[i] = state.beta1 * m1[i] + (1.0 - state.beta1) * g[i];
            m2[i] = state.beta2 * m2[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m1[i] / bc1;
            const double v_hat = m2[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

double clip_global_norm(BiLstmGradients& grads, double max_norm) {
    auto refs = tensor_refs(grads);
    double sum_sq = 0.0;
    for (const auto& ref : refs) {
        for (std::ptrdiff_t i = 0; i < ref.size; ++i) sum_sq += ref.data[i] * ref.data[i];
    }
    const double norm = std::sqrt(sum_sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const auto& ref : refs) {
            for (std::ptrdiff_t i = 0; i < ref.size; ++i) ref.data[i] *= scale;
        }
    }
    return norm;
}

// ---------------------------------------------------------------------------
// training loop

namespace {

constexpr double kClipNorm = 5.0;

double mean_loss_over(const std::vector<LabeledDocument>& docs, const Vocabulary& vocab,
                      const BiLstmModel& m, const DlTrainConfig& cfg) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < docs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), docs.size() - start);
        const PaddedBatch batch =
            encode_batch(std::span(docs).subspan(start, n), vocab, cfg.max_len);
        const Vector logits = forward_logits(batch, m);
        total += mean_bce_from_logits(logits, batch.labels) * static_cast<double>(n);
        count += n;
    }
    return total / static_cast<double>(count);
}

} // namespace

DlTrainResult train_dl(const std::vector<LabeledDocument>& train,
                       const std::vector<LabeledDocument>& validation, const Vocabulary& vocab,
                       const DlTrainConfig& cfg, BiLstmVariant variant) {
    cfg.validate();
    if (train.empty() || validation.empty()) {
        throw DataError("DL training needs nonempty train and validation partitions");
    }

    DlTrainConfig model_cfg = cfg;
    model_cfg.vocab_size = vocab.size(); // actual table size may undershoot the target
    Rng rng(cfg.seed);
    BiLstmModel model = init_bilstm(model_cfg, variant, rng);
    AdamState adam = AdamState::for_model(model);

    DlTrainResult result;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;

    std::vector<LabeledDocument> batch_docs;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t n =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            batch_docs.clear();
            for (std::size_t i = 0; i < n; ++i) batch_docs.push_back(train[order[start + i]]);
            const PaddedBatch batch = encode_batch(batch_docs, vocab, cfg.max_len);
            if (epoch == 1) result.empty_documents_replaced += batch.empty_replaced;

            LossAndGradients step;
            try {
                step = loss_and_backward(batch, model, /*training=*/true, &rng);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " + e.what());
            }
            epoch_loss += step.loss * static_cast<double>(n);
            seen += n;
            clip_global_norm(step.grads, kClipNorm);
            adam_step(model, step.grads, adam, cfg.learning_rate);
        }

        const double val_loss = mean_loss_over(validation, vocab, model, cfg);
        result.history.push_back({epoch, epoch_loss / static_cast<double>(seen), val_loss});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.model = model;
            result.best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
        }
        if (epochs_without_improvement >= cfg.patience) break;
    }
    return result;
}

std::vector<int> predict_labels(const std::vector<LabeledDocument>& docs, const Vocabulary& vocab,
                                const BiLstmModel& m, int max_len, int batch_size) {
    std::vector<int> predictions;
    predictions.reserve(docs.size());
    for (std::size_t start = 0; start < docs.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t n = std::min(static_cast<std::size_t>(batch_size), docs.size() - start);
        const PaddedBatch batch = encode_batch(std::span(docs).subspan(start, n), vocab, max_len);
        const Vector logits = forward_logits(batch, m);
        for (Eigen::Index b = 0; b < logits.size(); ++b) {
            predictions.push_back(logits(b) > 0.0 ? 1 : 0);
        }
    }
    return predictions;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

nlohmann::json tensor_to_json(const TensorRef& ref, std::initializer_list<Eigen::Index> shape) {
    nlohmann::json j;
    j["shape"] = std::vector<Eigen::Index>(shape);
    j["data"] = std::vector<double>(ref.data, ref.data + ref.size);
    return j;
}

} // namespace

std::string dl_vocab_to_json_string(const Vocabulary& vocab) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "dl_vocab";
    j["reserved"] = vocab.reserved;
    j["max_size"] = vocab.max_size;
    j["documents"] = vocab.fitted_documents;
    j["terms"] = vocab.terms;
    j["document_frequency"] = vocab.document_frequency;
    return j.dump(2);
}

Vocabulary dl_vocab_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed vocabulary JSON: ") + e.what());
    }
    if (j.value("kind", "") != "dl_vocab") throw DataError("not a sequence-model vocabulary file");
    if (j.value("format_version", 0) != 1) throw DataError("unsupported vocabulary format version");

    Vocabulary v;
    v.reserved = j.at("reserved").get<std::uint32_t>();
    v.max_size = j.at("max_size").get<std::size_t>();
    v.fitted_documents = j.at("documents").get<std::uint64_t>();
    v.terms = j.at("terms").get<std::vector<std::string>>();
    v.document_frequency = j.at("document_frequency").get<std::vector<std::uint64_t>>();
    for (std::uint32_t i = v.reserved; i < v.terms.size(); ++i) {
        v.term_to_index.emplace(v.terms[i], i);
    }
    return v;
}

std::string dl_vocab_hash(const Vocabulary& vocab) {
    return fnv1a64_hex(dl_vocab_to_json_string(vocab));
}

std::string bilstm_to_json_string(const BiLstmModel& m, const DlTrainConfig& cfg,
                                  const std::string& vocab_hash) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = variant_name(m.variant);
    j["vocab_hash"] = vocab_hash;
    j["dropout"] = m.dropout_rate;
    j["config"] = {
        {"vocab_size", cfg.vocab_size},   {"embedding_dim", cfg.embedding_dim},
        {"hidden_dim", cfg.hidden_dim},   {"layers", cfg.layers},
        {"dropout", cfg.dropout},         {"max_len", cfg.max_len},
        {"batch_size", cfg.batch_size},   {"learning_rate", cfg.learning_rate},
        {"epochs", cfg.epochs},           {"patience", cfg.patience},
        {"seed", cfg.seed},
    };

    // flat data is in Eigen's column-major layout; shapes disambiguate
    nlohmann::json tensors;
    BiLstmModel& mutable_m = const_cast<BiLstmModel&>(m);
    const Eigen::Index e = m.embedding_dim();
    const Eigen::Index h = m.hidden_dim();
    for (const auto& ref : tensor_refs(mutable_m)) {
        Eigen::Index rows = 0, cols = 1;
        if (ref.name == "embedding") {
            rows = m.vocab_size();
            cols = e;
        } else if (ref.name.find(".w_") != std::string::npos) {
            rows = h;
            cols = e;
        } else if (ref.name.find(".u_") != std::string::npos) {
            rows = h;
            cols = h;
        } else if (ref.name == "attention.w") {
            rows = h;
            cols = 2 * h;
        } else if (ref.name == "classifier.w") {
            rows = 2 * h;
        } else if (ref.name == "classifier.b") {
            rows = 1;
        } else { // per-gate biases, attention.b, attention.v
            rows = h;
        }
        tensors[ref.name] = tensor_to_json(ref, {rows, cols});
    }
    j["tensors"] = std::move(tensors);
    return j.dump();
}

LoadedBiLstm bilstm_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    if (j.value("format_version", 0) != 1) throw DataError("unsupported model format version");

    LoadedBiLstm loaded;
    loaded.model.variant = variant_from_name(j.at("kind").get<std::string>());
    loaded.vocab_hash = j.value("vocab_hash", "");
    loaded.model.dropout_rate = j.at("dropout").get<double>();

    const auto& c = j.at("config");
    loaded.config.vocab_size = c.at("vocab_size").get<std::size_t>();
    loaded.config.embedding_dim = c.at("embedding_dim").get<int>();
    loaded.config.hidden_dim = c.at("hidden_dim").get<int>();
    loaded.config.layers = c.at("layers").get<int>();
    loaded.config.dropout = c.at("dropout").get<double>();
    loaded.config.max_len = c.at("max_len").get<int>();
    loaded.config.batch_size = c.at("batch_size").get<int>();
    loaded.config.learning_rate = c.at("learning_rate").get<double>();
    loaded.config.epochs = c.at("epochs").get<int>();
    loaded.config.patience = c.at("patience").get<int>();
    loaded.config.seed = c.at("seed").get<std::uint64_t>();

    const Eigen::Index e = loaded.config.embedding_dim;
    const Eigen::Index h = loaded.config.hidden_dim;
    const auto& emb_shape = j.at("tensors").at("embedding").at("shape");
    const Eigen::Index vocab_rows = emb_shape.at(0).get<Eigen::Index>();

    loaded.model.embedding = Matrix::Zero(vocab_rows, e);
    loaded.model.forward_cell = zero_cell(h, e);
    loaded.model.backward_cell = zero_cell(h, e);
    if (loaded.model.variant == BiLstmVariant::attention) {
        loaded.model.attention.w = Matrix::Zero(h, 2 * h);
        loaded.model.attention.b = Vector::Zero(h);
        loaded.model.attention.v = Vector::Zero(h);
    }
    loaded.model.classifier.w = Vector::Zero(2 * h);

    const auto& tensors = j.at("tensors");
    for (const auto& ref : tensor_refs(loaded.model)) {
        if (!tensors.contains(ref.name)) throw DataError("model file is missing tensor " + ref.name);
        const auto data = tensors.at(ref.name).at("data").get<std::vector<double>>();
        if (data.size() != static_cast<std::size_t>(ref.size)) {
            throw DataError("tensor " + ref.name + " has wrong size");
        }
        std::copy(data.begin(), data.end(), ref.data);
    }
    return loaded;
}

std::string adam_state_to_json_string(const AdamState& s) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "adam_state";
    j["step"] = s.step;
    j["beta1"] = s.beta1;
    j["beta2"] = s.beta2;
    j["epsilon"] = s.epsilon;
    j["first_moment"] = s.first_moment;
    j["second_moment"] = s.second_moment;
    return j.dump();
}

AdamState adam_state_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed optimizer state JSON: ") + e.what());
    }
    if (j.value("kind", "") != "adam_state") throw DataError("not an optimizer state file");

    AdamState s;
    s.step = j.at("step").get<std::int64_t>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.first_moment = j.at("first_moment").get<std::vector<std::vector<double>>>();
    s.second_moment = j.at("second_moment").get<std::vector<std::vector<double>>>();
    return s;
}

} // namespace sentibench
