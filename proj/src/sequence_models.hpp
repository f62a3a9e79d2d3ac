#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corpus.hpp"
#include "rng.hpp"
#include "tfidf.hpp"

namespace sentibench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fixed-length batch. Row b holds document b's token ids, truncated to
// max_len and right-padded with <pad>; mask marks real positions.
struct PaddedBatch {
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> token_ids; // B x L
    Matrix mask;                                                            // B x L, 0/1
    std::vector<int> labels;                                                // B
    std::vector<int> lengths;                                               // B, each >= 1
    std::size_t empty_replaced = 0; // docs that cleaned down to nothing and became [<unk>]

    Eigen::Index rows() const { return token_ids.rows(); }
    Eigen::Index max_len() const { return token_ids.cols(); }
};

// One direction's gate parameters: per-gate input weights (H x E),
// recurrent weights (H x H) and biases (H).
struct LstmCellParams {
    Matrix w_forget, w_input, w_output, w_cell;
    Matrix u_forget, u_input, u_output, u_cell;
    Vector b_forget, b_input, b_output, b_cell;
};

struct AttentionParams {
    Matrix w; // A x 2H
    Vector b; // A
    Vector v; // A

    bool empty() const { return w.size() == 0; }
};

struct ClassifierHead {
    Vector w; // 2H
    double bias = 0.0;
};

enum class BiLstmVariant {
    plain,
    attention,
};

const char* variant_name(BiLstmVariant v);
BiLstmVariant variant_from_name(const std::string& name);

struct DlTrainConfig {
    std::size_t vocab_size = 5000;
    int embedding_dim = 64;
    int hidden_dim = 64;
    int layers = 1;
    double dropout = 0.3;
    int max_len = 80;
    int batch_size = 128;
    double learning_rate = 0.001;
    int epochs = 3;
    int patience = 3;
    std::uint64_t seed = 42;

    void validate() const;
};

struct BiLstmModel {
    Matrix embedding; // vocab_size x E; row 0 (<pad>) stays all zero
    LstmCellParams forward_cell;
    LstmCellParams backward_cell;
    AttentionParams attention; // empty for the plain variant
    ClassifierHead classifier;
    double dropout_rate = 0.0;
    BiLstmVariant variant = BiLstmVariant::plain;

    Eigen::Index vocab_size() const { return embedding.rows(); }
    Eigen::Index embedding_dim() const { return embedding.cols(); }
    Eigen::Index hidden_dim() const { return forward_cell.b_forget.size(); }
};

// Gradient holder mirroring every trainable tensor of BiLstmModel.
struct BiLstmGradients {
    Matrix embedding;
    LstmCellParams forward_cell;
    LstmCellParams backward_cell;
    AttentionParams attention;
    ClassifierHead classifier;
};

// Named flat view over each tensor, shared by Adam, gradient clipping,
// serialization and the finite-difference tests. Order is fixed.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    std::ptrdiff_t size = 0;
};
std::vector<TensorRef> tensor_refs(BiLstmModel& m);
std::vector<TensorRef> tensor_refs(BiLstmGradients& g);

BiLstmModel init_bilstm(const DlTrainConfig& cfg, BiLstmVariant variant, Rng& rng);
BiLstmGradients zero_gradients_like(const BiLstmModel& m);

// ---------------------------------------------------------------------------
// forward / backward machinery

PaddedBatch encode_batch(std::span<const LabeledDocument> docs, const Vocabulary& vocab,
                         int max_len);

// One LSTM step over a batch: f,i,o = sigmoid(x W' + h U' + b),
// g = tanh(...), c = f.c_prev + i.g, h = o.tanh(c).
struct CellStep {
    Matrix f, i, o, g; // gate activations, B x H
    Matrix c;          // new cell state
    Matrix tanh_c;
    Matrix h;          // new hidden state
};
CellStep lstm_cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                           const LstmCellParams& p);

// Full forward pass with caches for backpropagation. Per-step outputs are
// [h_fwd ; h_bwd] with masked positions zeroed; rows carry their previous
// (h, c) through padded steps so appended padding cannot perturb logits.
// Dropout (inverted scaling) applies to per-step outputs during training.
struct BiLstmForward {
    std::vector<Matrix> step_output; // L entries, B x 2H, post mask + dropout

    // per direction, indexed by sequence position t (not scan order);
    // h and c are the post-carry states, tanh_c belongs to the raw cell
    struct DirectionCache {
        std::vector<CellStep> steps;
    };
    DirectionCache fwd, bwd;
    std::vector<Matrix> dropout_mask; // empty when not training or dropout == 0

    // attention caches (attention variant only)
    Matrix alpha;                  // B x L, masked positions exactly 0
    std::vector<Matrix> attn_tanh; // L entries, B x A

    Matrix pooled;  // B x 2H
    Vector logits;  // B
};

BiLstmForward bilstm_forward(const PaddedBatch& batch, const BiLstmModel& m, bool training,
                             Rng* dropout_rng);

// Masked softmax pooling: e_t = v' tanh(W h_t + b), weights normalized over
// real positions only; context = sum_t alpha_t h_t.
struct AttentionResult {
    Matrix context;                // B x 2H
    Matrix alpha;                  // B x L
    std::vector<Matrix> tanh_pre;  // cache for backward, B x A per step
};
AttentionResult attention_pool(const std::vector<Matrix>& hidden, const Matrix& mask,
                               const AttentionParams& p);

Vector classify(const Matrix& pooled, const ClassifierHead& head);

// Mean binary cross-entropy over the batch plus full gradients through the
// head, attention, both LSTM directions and the embedding table (the <pad>
// row's gradient is pinned to zero).
struct LossAndGradients {
    double loss = 0.0;
    BiLstmGradients grads;
};
LossAndGradients loss_and_backward(const PaddedBatch& batch, const BiLstmModel& m, bool training,
                                   Rng* dropout_rng);

Vector forward_logits(const PaddedBatch& batch, const BiLstmModel& m);

// ---------------------------------------------------------------------------
// optimization / training loop

struct AdamState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_model(BiLstmModel& m);
};

void adam_step(BiLstmModel& params, BiLstmGradients& grads, AdamState& state, double lr);

// Scales gradients so their global L2 norm is at most max_norm. Returns the
// pre-clip norm.
double clip_global_norm(BiLstmGradients& grads, double max_norm);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct DlTrainResult {
    BiLstmModel model; // best-validation-loss snapshot
    std::vector<EpochStats> history;
    int best_epoch = 0;
    std::size_t empty_documents_replaced = 0;
};

DlTrainResult train_dl(const std::vector<LabeledDocument>& train,
                       const std::vector<LabeledDocument>& validation, const Vocabulary& vocab,
                       const DlTrainConfig& cfg, BiLstmVariant variant);

std::vector<int> predict_labels(const std::vector<LabeledDocument>& docs, const Vocabulary& vocab,
                                const BiLstmModel& m, int max_len, int batch_size);

// ---------------------------------------------------------------------------
// serialization

std::string dl_vocab_to_json_string(const Vocabulary& vocab);
Vocabulary dl_vocab_from_json_string(const std::string& text);
std::string dl_vocab_hash(const Vocabulary& vocab);

std::string bilstm_to_json_string(const BiLstmModel& m, const DlTrainConfig& cfg,
                                  const std::string& vocab_hash);
struct LoadedBiLstm {
    BiLstmModel model;
    DlTrainConfig config;
    std::string vocab_hash;
};
LoadedBiLstm bilstm_from_json_string(const std::string& text);

std::string adam_state_to_json_string(const AdamState& s);
AdamState adam_state_from_json_string(const std::string& text);

} // namespace sentibench
