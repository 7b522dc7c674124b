#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "vh/rng.hpp"

namespace vh::num {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

// Gate rows are stacked [input; forget; candidate; output], each block h rows.
struct LstmLayer {
    MatrixXd w_ih;  // 4h x in_dim
    MatrixXd w_hh;  // 4h x h
    VectorXd bias;  // 4h
};

struct TensorView {
    std::string name;
    double* data;
    Eigen::Index size;
};

struct ModelParams {
    MatrixXd embedding;  // d x n_in (one column per input symbol)
    std::vector<LstmLayer> layers;
    MatrixXd proj;       // n_out x h
    VectorXd proj_bias;  // n_out

    int embed_dim() const { return static_cast<int>(embedding.rows()); }
    int n_inputs() const { return static_cast<int>(embedding.cols()); }
    int hidden_dim() const {
        return static_cast<int>(layers.front().w_hh.cols());
    }
    int n_outputs() const { return static_cast<int>(proj.rows()); }
    int n_layers() const { return static_cast<int>(layers.size()); }

    std::vector<TensorView> tensors();
    std::vector<TensorView> tensors() const;  // views are const in spirit

    void set_zero();
    bool all_finite() const;

    static ModelParams zeros(int n_in, int n_out, int d, int h, int n_layers);
    // uniform(-k, k) with k = 1/sqrt(h); forget-gate bias 1.0
    static ModelParams init(int n_in, int n_out, int d, int h, int n_layers,
                            Rng& rng);
};

using GradientSet = ModelParams;  // same shapes, used as accumulators

// Cached activations from one forward pass, consumed by lstm_backward.
struct ForwardCache {
    MatrixXi tokens;  // steps x batch
    int steps = 0, batch = 0;
    double dropout = 0.0;
    // indexed [step][layer]
    std::vector<std::vector<MatrixXd>> x;       // layer input (post-dropout)
    std::vector<std::vector<MatrixXd>> gates;   // 4h x B, post-nonlinearity
    std::vector<std::vector<MatrixXd>> c;       // cell state
    std::vector<std::vector<MatrixXd>> tanh_c;  // tanh(cell state)
    std::vector<std::vector<MatrixXd>> h;       // hidden state (pre-dropout)
    std::vector<std::vector<MatrixXd>> drop_mask;  // scale masks, empty if off
    MatrixXd h_top(int step) const;  // projection input (post-dropout)
};

// Runs the stacked LSTM over a batch of token columns. Dropout (inverted
// scaling) is applied to layer outputs when rate > 0 and rng != nullptr.
ForwardCache lstm_forward(const ModelParams& params, const MatrixXi& tokens,
                          double dropout_rate = 0.0, Rng* rng = nullptr);

// Backpropagates per-step gradients w.r.t. the top hidden output (post
// dropout). d_h_top[t] must be h x B or empty (treated as zero). Accumulates
// into grads.
void lstm_backward(const ModelParams& params, const ForwardCache& cache,
                   const std::vector<MatrixXd>& d_h_top, GradientSet& grads);

// Softmax restricted to a support set; zero probability off support.
VectorXd masked_softmax(const VectorXd& logits,
                        const std::vector<std::uint8_t>& support);
VectorXd softmax(const VectorXd& logits);

// -ln p(target)
double cross_entropy(const VectorXd& probs, int target);

struct AdamState {
    GradientSet m, v;
    long step = 0;
    static AdamState like(const ModelParams& params);
};

void adam_update(ModelParams& params, const GradientSet& grads,
                 AdamState& state, double lr = 1e-3, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

// Central finite differences over a sampled subset of coordinates, compared
// against the supplied analytic gradients. Returns the worst relative error.
double finite_diff_check(ModelParams& params, const GradientSet& analytic,
                         const std::function<double(const ModelParams&)>& loss,
                         double epsilon, int samples_per_tensor, Rng& rng);

}  // namespace vh::num
