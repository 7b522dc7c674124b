#include "vh/numerics.hpp"

#include <cmath>

#include "vh/errors.hpp"

namespace vh::num {

namespace {

inline MatrixXd sigmoid(const MatrixXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

void add_views(std::vector<TensorView>& out, const std::string& name,
               MatrixXd& m) {
    out.push_back({name, m.data(), m.size()});
}
void add_views(std::vector<TensorView>& out, const std::string& name,
               VectorXd& v) {
    out.push_back({name, v.data(), v.size()});
}

}  // namespace

std::vector<TensorView> ModelParams::tensors() {
    std::vector<TensorView> out;
    add_views(out, "embedding", embedding);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "lstm" + std::to_string(l) + ".";
        add_views(out, p + "w_ih", layers[l].w_ih);
        add_views(out, p + "w_hh", layers[l].w_hh);
        add_views(out, p + "bias", layers[l].bias);
    }
    add_views(out, "proj", proj);
    add_views(out, "proj_bias", proj_bias);
    return out;
}

std::vector<TensorView> ModelParams::tensors() const {
    return const_cast<ModelParams*>(this)->tensors();
}

void ModelParams::set_zero() {
    for (auto& t : tensors())
        Eigen::Map<VectorXd>(t.data, t.size).setZero();
}

bool ModelParams::all_finite() const {
    for (const auto& t : tensors()) {
        if (!Eigen::Map<const VectorXd>(t.data, t.size).allFinite())
            return false;
    }
    return true;
}

ModelParams ModelParams::zeros(int n_in, int n_out, int d, int h,
                               int n_layers) {
    ModelParams p;
    p.embedding = MatrixXd::Zero(d, n_in);
    for (int l = 0; l < n_layers; ++l) {
        const int in_dim = l == 0 ? d : h;
        p.layers.push_back({MatrixXd::Zero(4 * h, in_dim),
                            MatrixXd::Zero(4 * h, h), VectorXd::Zero(4 * h)});
    }
    p.proj = MatrixXd::Zero(n_out, h);
    p.proj_bias = VectorXd::Zero(n_out);
    return p;
}

ModelParams ModelParams::init(int n_in, int n_out, int d, int h, int n_layers,
                              Rng& rng) {
    ModelParams p = zeros(n_in, n_out, d, h, n_layers);
    const double k = 1.0 / std::sqrt(static_cast<double>(h));
    for (auto& t : p.tensors()) {
        if (t.name.ends_with("bias")) continue;
        for (Eigen::Index i = 0; i < t.size; ++i)
            t.data[i] = rng.uniform(-k, k);
    }
    for (auto& layer : p.layers) layer.bias.segment(h, h).setConstant(1.0);
    return p;
}

MatrixXd ForwardCache::h_top(int step) const {
    const auto& top = h[step].back();
    if (drop_mask.empty() || drop_mask[step].empty()) return top;
    return top.cwiseProduct(drop_mask[step].back());
}

ForwardCache lstm_forward(const ModelParams& params, const MatrixXi& tokens,
                          double dropout_rate, Rng* rng) {
    if (!params.all_finite())
        throw NonFiniteInput("non-finite model parameters");
    const int steps = static_cast<int>(tokens.rows());
    const int batch = static_cast<int>(tokens.cols());
    const int n_layers = params.n_layers();
    const int h_dim = params.hidden_dim();
    if ((tokens.array() < 0).any() ||
        (tokens.array() >= params.n_inputs()).any())
        throw DimensionMismatch("token index out of embedding range");

    const bool use_dropout = dropout_rate > 0.0 && rng != nullptr;
    ForwardCache cache;
    cache.tokens = tokens;
    cache.steps = steps;
    cache.batch = batch;
    cache.dropout = use_dropout ? dropout_rate : 0.0;

    std::vector<MatrixXd> h_prev(n_layers, MatrixXd::Zero(h_dim, batch));
    std::vector<MatrixXd> c_prev(n_layers, MatrixXd::Zero(h_dim, batch));
    cache.x.resize(steps);
    cache.gates.resize(steps);
    cache.c.resize(steps);
    cache.tanh_c.resize(steps);
    cache.h.resize(steps);
    cache.drop_mask.resize(steps);

    const double keep = 1.0 - dropout_rate;
    for (int s = 0; s < steps; ++s) {
        MatrixXd x(params.embed_dim(), batch);
        for (int b = 0; b < batch; ++b)
            x.col(b) = params.embedding.col(tokens(s, b));
        for (int l = 0; l < n_layers; ++l) {
            const auto& layer = params.layers[l];
            MatrixXd pre = layer.w_ih * x + layer.w_hh * h_prev[l];
            pre.colwise() += layer.bias;
            MatrixXd gates(4 * h_dim, batch);
            gates.topRows(2 * h_dim) = sigmoid(pre.topRows(2 * h_dim));
            gates.middleRows(2 * h_dim, h_dim) =
                pre.middleRows(2 * h_dim, h_dim).array().tanh().matrix();
            gates.bottomRows(h_dim) = sigmoid(pre.bottomRows(h_dim));

            const auto i_g = gates.topRows(h_dim);
            const auto f_g = gates.middleRows(h_dim, h_dim);
            const auto g_g = gates.middleRows(2 * h_dim, h_dim);
            const auto o_g = gates.bottomRows(h_dim);

            MatrixXd c_new = f_g.cwiseProduct(c_prev[l]) + i_g.cwiseProduct(g_g);
            MatrixXd tc = c_new.array().tanh().matrix();
            MatrixXd h_new = o_g.cwiseProduct(tc);

            MatrixXd mask;
            if (use_dropout) {
                mask = MatrixXd(h_dim, batch);
                for (int b = 0; b < batch; ++b)
                    for (int r = 0; r < h_dim; ++r)
                        mask(r, b) = rng->bernoulli(dropout_rate) ? 0.0 : 1.0 / keep;
            }

            cache.x[s].push_back(std::move(x));
            cache.gates[s].push_back(std::move(gates));
            cache.c[s].push_back(c_new);
            cache.tanh_c[s].push_back(std::move(tc));
            cache.h[s].push_back(h_new);
            if (use_dropout) cache.drop_mask[s].push_back(mask);

            x = use_dropout ? h_new.cwiseProduct(mask) : h_new;
            h_prev[l] = std::move(h_new);
            c_prev[l] = std::move(c_new);
        }
    }
    return cache;
}

void lstm_backward(const ModelParams& params, const ForwardCache& cache,
                   const std::vector<MatrixXd>& d_h_top, GradientSet& grads) {
    const int steps = cache.steps;
    const int batch = cache.batch;
    const int n_layers = params.n_layers();
    const int h_dim = params.hidden_dim();
    if (static_cast<int>(d_h_top.size()) != steps)
        throw CacheMismatch("upstream gradient count != cached steps");
    if (static_cast<int>(cache.x.size()) != steps ||
        (steps > 0 &&
         static_cast<int>(cache.x[0].size()) != n_layers))
        throw CacheMismatch("cache shape does not match parameters");

    const bool dropped = cache.dropout > 0.0;
    std::vector<MatrixXd> dh_next(n_layers, MatrixXd::Zero(h_dim, batch));
    std::vector<MatrixXd> dc_next(n_layers, MatrixXd::Zero(h_dim, batch));

    for (int s = steps - 1; s >= 0; --s) {
        MatrixXd d_from_above;  // gradient w.r.t. layer input x of layer above
        for (int l = n_layers - 1; l >= 0; --l) {
            MatrixXd dh = dh_next[l];
            if (l == n_layers - 1) {
                if (d_h_top[s].size() > 0) {
                    if (d_h_top[s].rows() != h_dim || d_h_top[s].cols() != batch)
                        throw CacheMismatch("upstream gradient has wrong shape");
                    dh += dropped
                              ? d_h_top[s].cwiseProduct(cache.drop_mask[s][l])
                              : d_h_top[s];
                }
            } else {
                dh += dropped
                          ? d_from_above.cwiseProduct(cache.drop_mask[s][l])
                          : d_from_above;
            }

            const auto& gates = cache.gates[s][l];
            const auto i_g = gates.topRows(h_dim);
            const auto f_g = gates.middleRows(h_dim, h_dim);
            const auto g_g = gates.middleRows(2 * h_dim, h_dim);
            const auto o_g = gates.bottomRows(h_dim);
            const auto& tc = cache.tanh_c[s][l];
            const MatrixXd& c_prev = s > 0 ? cache.c[s - 1][l]
                                           : MatrixXd::Zero(h_dim, batch).eval();

            MatrixXd dc =
                (dc_next[l].array() +
                 dh.array() * o_g.array() * (1.0 - tc.array().square()))
                    .matrix();
            MatrixXd dpre(4 * h_dim, batch);
            // d(sigmoid pre) = g*(1-g), d(tanh pre) = 1-g^2
            dpre.topRows(h_dim) = (dc.cwiseProduct(g_g).array() * i_g.array() *
                                   (1.0 - i_g.array()))
                                      .matrix();
            dpre.middleRows(h_dim, h_dim) =
                (dc.cwiseProduct(c_prev).array() * f_g.array() *
                 (1.0 - f_g.array()))
                    .matrix();
            dpre.middleRows(2 * h_dim, h_dim) =
                (dc.cwiseProduct(i_g).array() * (1.0 - g_g.array().square()))
                    .matrix();
            dpre.bottomRows(h_dim) =
                (dh.cwiseProduct(tc).array() * o_g.array() *
                 (1.0 - o_g.array()))
                    .matrix();

            const MatrixXd& h_prev_mat =
                s > 0 ? cache.h[s - 1][l]
                      : MatrixXd::Zero(h_dim, batch).eval();
            auto& glayer = grads.layers[l];
            glayer.w_ih.noalias() += dpre * cache.x[s][l].transpose();
            glayer.w_hh.noalias() += dpre * h_prev_mat.transpose();
            glayer.bias.noalias() += dpre.rowwise().sum();

            d_from_above.noalias() = params.layers[l].w_ih.transpose() * dpre;
            dh_next[l].noalias() = params.layers[l].w_hh.transpose() * dpre;
            dc_next[l] = dc.cwiseProduct(f_g);
        }
        for (int b = 0; b < batch; ++b)
            grads.embedding.col(cache.tokens(s, b)) += d_from_above.col(b);
    }
}

VectorXd masked_softmax(const VectorXd& logits,
                        const std::vector<std::uint8_t>& support) {
    if (static_cast<Eigen::Index>(support.size()) != logits.size())
        throw DimensionMismatch("support size != logits size");
    if (!logits.allFinite()) throw NonFiniteInput("non-finite logits");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logits.size(); ++i)
        if (support[i] && logits[i] > max_logit) max_logit = logits[i];
    if (!std::isfinite(max_logit)) throw EmptySupport("empty support set");

    VectorXd probs = VectorXd::Zero(logits.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        if (!support[i]) continue;
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    probs /= sum;
    return probs;
}

VectorXd softmax(const VectorXd& logits) {
    return masked_softmax(logits,
                          std::vector<std::uint8_t>(logits.size(), 1));
}

double cross_entropy(const VectorXd& probs, int target) {
    if (target < 0 || target >= probs.size())
        throw TargetOffSupport("target index out of range");
    if (probs[target] <= 0.0)
        throw TargetOffSupport("target has zero probability");
    return -std::log(probs[target]);
}

AdamState AdamState::like(const ModelParams& params) {
    AdamState st;
    st.m = params;
    st.m.set_zero();
    st.v = st.m;
    return st;
}

void adam_update(ModelParams& params, const GradientSet& grads,
                 AdamState& state, double lr, double beta1, double beta2,
                 double eps) {
    if (!grads.all_finite()) throw NonFiniteGradient("non-finite gradient");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    auto pt = params.tensors();
    auto gt = grads.tensors();
    auto mt = state.m.tensors();
    auto vt = state.v.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
        Eigen::Map<VectorXd> p(pt[k].data, pt[k].size);
        Eigen::Map<const VectorXd> g(gt[k].data, gt[k].size);
        Eigen::Map<VectorXd> m(mt[k].data, mt[k].size);
        Eigen::Map<VectorXd> v(vt[k].data, vt[k].size);
        m = beta1 * m + (1.0 - beta1) * g;
        v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
        p.array() -=
            lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
}

double finite_diff_check(ModelParams& params, const GradientSet& analytic,
                         const std::function<double(const ModelParams&)>& loss,
                         double epsilon, int samples_per_tensor, Rng& rng) {
    if (epsilon <= 0.0) throw BadEpsilon("epsilon must be positive");
    double worst = 0.0;
    auto pt = params.tensors();
    auto at = analytic.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
        const Eigen::Index n = pt[k].size;
        const int samples =
            std::min<Eigen::Index>(samples_per_tensor, n);
        for (int s = 0; s < samples; ++s) {
            const Eigen::Index i =
                static_cast<Eigen::Index>(rng.uniform_int(n));
            const double saved = pt[k].data[i];
            pt[k].data[i] = saved + epsilon;
            const double up = loss(params);
            pt[k].data[i] = saved - epsilon;
            const double down = loss(params);
            pt[k].data[i] = saved;
            const double fd = (up - down) / (2.0 * epsilon);
            const double an = at[k].data[i];
            // floor keeps roundoff noise on near-zero coordinates from
            // dominating the ratio; central differences carry ~1e-11
            // absolute error at eps = 1e-5
            const double denom = std::max(std::abs(fd) + std::abs(an), 1e-6);
            worst = std::max(worst, std::abs(fd - an) / denom);
        }
    }
    return worst;
}

}  // namespace vh::num
