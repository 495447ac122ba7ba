#include "scar/ranker.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"
#include "scar/rng.hpp"

namespace scar {

namespace {

using Vec = std::vector<double>;

// out = W x + b, W is rows x cols row-major.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
    const std::size_t rows = out.size();
    const std::size_t cols = x.size();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w.data() + i * cols;
        double acc = b[i];
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

// gw += dy (outer) x ; gb += dy
void accumulate_outer(std::span<double> gw, std::span<double> gb, std::span<const double> dy,
                      std::span<const double> x) {
    const std::size_t cols = x.size();
    for (std::size_t i = 0; i < dy.size(); ++i) {
        if (dy[i] == 0.0) continue;
        double* row = gw.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += dy[i] * x[j];
        gb[i] += dy[i];
    }
}

// dx = W^T dy
void transpose_apply(std::span<const double> w, std::span<const double> dy, std::span<double> dx) {
    const std::size_t cols = dx.size();
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t i = 0; i < dy.size(); ++i) {
        if (dy[i] == 0.0) continue;
        const double* row = w.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) dx[j] += row[j] * dy[i];
    }
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

// Unit vector (a - b) / |a - b|, or zeros when a == b.
Vec unit_difference(std::span<const double> a, std::span<const double> b, double dist) {
    Vec u(a.size(), 0.0);
    if (dist > 0.0) {
        for (std::size_t j = 0; j < a.size(); ++j) u[j] = (a[j] - b[j]) / dist;
    }
    return u;
}

// Intermediate values of one forward pass, kept for backprop.
struct Activations {
    Vec joint;   // [cls_x; cls_y]
    Vec z1, h1;  // relation layer 1
    Vec z2, v_c; // relation layer 2
    Vec v_p;
    Vec q;       // [v_p; v_c]
    Vec a1, g;   // head layer 1
    double score = 0.0;
};

void check_dims(const RankerParams& p, const EmbeddingRecord& x, const EmbeddingRecord& y) {
    const std::size_t m = p.dim();
    if (x.cls.size() != m || y.cls.size() != m || y.pooled.size() != m) {
        fail(ErrorKind::shape, "embedding dimension does not match ranker dimension " +
                                   std::to_string(m));
    }
}

Activations run_forward(const RankerParams& p, const EmbeddingRecord& x, const EmbeddingRecord& y) {
    check_dims(p, x, y);
    const std::size_t m = p.dim();
    const std::size_t h = p.hidden();
    using T = RankerParams;
    Activations a;
    a.joint.resize(2 * m);
    std::copy(x.cls.begin(), x.cls.end(), a.joint.begin());
    std::copy(y.cls.begin(), y.cls.end(), a.joint.begin() + static_cast<std::ptrdiff_t>(m));

    a.z1.resize(m);
    affine(p[T::rel1_w], p[T::rel1_b], a.joint, a.z1);
    a.h1.resize(m);
    std::transform(a.z1.begin(), a.z1.end(), a.h1.begin(), relu);
    a.z2.resize(m);
    affine(p[T::rel2_w], p[T::rel2_b], a.h1, a.z2);
    a.v_c.resize(m);
    std::transform(a.z2.begin(), a.z2.end(), a.v_c.begin(), relu);

    a.v_p.resize(m);
    affine(p[T::form_w], p[T::form_b], y.pooled, a.v_p);

    a.q.resize(2 * m);
    std::copy(a.v_p.begin(), a.v_p.end(), a.q.begin());
    std::copy(a.v_c.begin(), a.v_c.end(), a.q.begin() + static_cast<std::ptrdiff_t>(m));

    a.a1.resize(h);
    affine(p[T::head1_w], p[T::head1_b], a.q, a.a1);
    a.g.resize(h);
    std::transform(a.a1.begin(), a.a1.end(), a.g.begin(), relu);
    double s = p[T::head2_b][0];
    const auto w2 = p[T::head2_w];
    for (std::size_t i = 0; i < h; ++i) s += w2[i] * a.g[i];
    a.score = s;
    return a;
}

// Adds the gradient of `d_score * score + <d_vp, v_p> + <d_vc, v_c>` to `g`.
void backward(const RankerParams& p, const Activations& a, const EmbeddingRecord& y,
              double d_score, std::span<const double> d_vp, std::span<const double> d_vc,
              RankerParams& g) {
    const std::size_t m = p.dim();
    const std::size_t h = p.hidden();
    using T = RankerParams;

    Vec da1(h, 0.0);
    if (d_score != 0.0) {
        const auto w2 = p[T::head2_w];
        auto gw2 = g[T::head2_w];
        for (std::size_t i = 0; i < h; ++i) {
            gw2[i] += d_score * a.g[i];
            da1[i] = a.a1[i] > 0.0 ? d_score * w2[i] : 0.0;
        }
        g[T::head2_b][0] += d_score;
        accumulate_outer(g[T::head1_w], g[T::head1_b], da1, a.q);
    }
    Vec dq(2 * m, 0.0);
    if (d_score != 0.0) transpose_apply(p[T::head1_w], da1, dq);

    Vec dvp(m);
    Vec dz2(m);
    for (std::size_t j = 0; j < m; ++j) {
        dvp[j] = dq[j] + d_vp[j];
        const double dvc = dq[m + j] + d_vc[j];
        dz2[j] = a.z2[j] > 0.0 ? dvc : 0.0;
    }
    accumulate_outer(g[T::form_w], g[T::form_b], dvp, y.pooled);

    accumulate_outer(g[T::rel2_w], g[T::rel2_b], dz2, a.h1);
    Vec dh1(m);
    transpose_apply(p[T::rel2_w], dz2, dh1);
    Vec dz1(m);
    for (std::size_t j = 0; j < m; ++j) dz1[j] = a.z1[j] > 0.0 ? dh1[j] : 0.0;
    accumulate_outer(g[T::rel1_w], g[T::rel1_b], dz1, a.joint);
}

double hinge(double x) { return x > 0.0 ? x : 0.0; }

void check_masks(std::span<const TripletView> batch, std::span<const PairMask> masks) {
    if (!masks.empty() && masks.size() != batch.size()) {
        fail(ErrorKind::argument, "mask count does not match batch size");
    }
}

// Loss of one triplet; when `g` is set also adds scale * gradient.
double triplet_loss(const RankerParams& p, const TripletView& t, PairMask mask,
                    const RankerConfig& cfg, RankerParams* g, double scale) {
    const auto d = run_forward(p, *t.instruction, *t.direct);
    const auto r = run_forward(p, *t.instruction, *t.referenced);
    const auto h = run_forward(p, *t.instruction, *t.human);

    // Ranking and representation terms summed apart, as ranking_loss + rep_loss.
    double loss = 0.0;
    double rep = 0.0;
    double ds_d = 0.0;
    double ds_r = 0.0;
    double ds_h = 0.0;
    auto pair = [&](bool active, double s_a, double s_b, double& ds_a, double& ds_b) {
        if (!active) return;
        const double arg = cfg.alpha - s_a + s_b;
        if (arg > 0.0) {
            loss += arg;
            ds_a -= 1.0;
            ds_b += 1.0;
        }
    };
    pair(mask.direct_referenced, d.score, r.score, ds_d, ds_r);
    pair(mask.referenced_human, r.score, h.score, ds_r, ds_h);
    pair(mask.direct_human, d.score, h.score, ds_d, ds_h);

    const std::size_t m = p.dim();
    Vec dvp_d(m, 0.0), dvp_r(m, 0.0), dvp_h(m, 0.0);
    Vec dvc_d(m, 0.0), dvc_r(m, 0.0), dvc_h(m, 0.0);

    if (cfg.lambda_p != 0.0) {
        const double d_dr = distance(d.v_p, r.v_p);
        const double d_rh = distance(r.v_p, h.v_p);
        const double arg = d_dr - d_rh + cfg.beta_p;
        if (arg > 0.0) {
            rep += cfg.lambda_p * arg;
            if (g != nullptr) {
                const auto u_dr = unit_difference(d.v_p, r.v_p, d_dr);
                const auto u_rh = unit_difference(r.v_p, h.v_p, d_rh);
                for (std::size_t j = 0; j < m; ++j) {
                    dvp_d[j] = cfg.lambda_p * u_dr[j];
                    dvp_r[j] = cfg.lambda_p * (-u_dr[j] - u_rh[j]);
                    dvp_h[j] = cfg.lambda_p * u_rh[j];
                }
            }
        }
    }
    if (cfg.lambda_c != 0.0) {
        const double d_hr = distance(h.v_c, r.v_c);
        const double d_dh = distance(d.v_c, h.v_c);
        const double arg = d_hr - d_dh + cfg.beta_c;
        if (arg > 0.0) {
            rep += cfg.lambda_c * arg;
            if (g != nullptr) {
                const auto u_hr = unit_difference(h.v_c, r.v_c, d_hr);
                const auto u_dh = unit_difference(d.v_c, h.v_c, d_dh);
                for (std::size_t j = 0; j < m; ++j) {
                    dvc_h[j] = cfg.lambda_c * (u_hr[j] + u_dh[j]);
                    dvc_r[j] = -cfg.lambda_c * u_hr[j];
                    dvc_d[j] = -cfg.lambda_c * u_dh[j];
                }
            }
        }
    }

    if (g != nullptr) {
        for (auto* v : {&dvp_d, &dvp_r, &dvp_h, &dvc_d, &dvc_r, &dvc_h}) {
            for (auto& x : *v) x *= scale;
        }
        backward(p, d, *t.direct, scale * ds_d, dvp_d, dvc_d, *g);
        backward(p, r, *t.referenced, scale * ds_r, dvp_r, dvc_r, *g);
        backward(p, h, *t.human, scale * ds_h, dvp_h, dvc_h, *g);
    }
    return loss + rep;
}

std::size_t tensor_size(std::size_t m, std::size_t h, std::size_t t) {
    switch (t) {
        case RankerParams::form_w: return m * m;
        case RankerParams::form_b: return m;
        case RankerParams::rel1_w: return m * 2 * m;
        case RankerParams::rel1_b: return m;
        case RankerParams::rel2_w: return m * m;
        case RankerParams::rel2_b: return m;
        case RankerParams::head1_w: return h * 2 * m;
        case RankerParams::head1_b: return h;
        case RankerParams::head2_w: return h;
        case RankerParams::head2_b: return 1;
        default: return 0;
    }
}

}  // namespace

void RankerConfig::validate() const {
    if (dim == 0 || hidden == 0) fail(ErrorKind::config, "ranker dim and hidden must be >= 1");
    for (double v : {alpha, beta_p, beta_c, lambda_p, lambda_c}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(ErrorKind::config, "margins and lambdas must be finite and >= 0");
        }
    }
    if (!std::isfinite(sigma)) fail(ErrorKind::config, "sigma must be finite");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::config, "lr must be > 0");
    if (max_epochs < 1) fail(ErrorKind::config, "max_epochs must be >= 1");
    if (patience < 1) fail(ErrorKind::config, "patience must be >= 1");
    if (batch_size == 0) fail(ErrorKind::config, "batch_size must be >= 1");
}

nlohmann::ordered_json RankerConfig::to_json() const {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["hidden"] = hidden;
    j["alpha"] = alpha;
    j["beta_p"] = beta_p;
    j["beta_c"] = beta_c;
    j["lambda_p"] = lambda_p;
    j["lambda_c"] = lambda_c;
    j["sigma"] = sigma;
    j["lr"] = lr;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    return j;
}

RankerConfig RankerConfig::from_json(const nlohmann::json& j, RankerConfig base) {
    if (!j.is_object()) fail(ErrorKind::config, "ranker config must be a JSON object");
    try {
        auto set = [&](const char* key, auto& field) {
            if (auto it = j.find(key); it != j.end()) it->get_to(field);
        };
        set("dim", base.dim);
        set("hidden", base.hidden);
        set("alpha", base.alpha);
        set("beta_p", base.beta_p);
        set("beta_c", base.beta_c);
        set("lambda_p", base.lambda_p);
        set("lambda_c", base.lambda_c);
        set("sigma", base.sigma);
        set("lr", base.lr);
        set("max_epochs", base.max_epochs);
        set("patience", base.patience);
        set("batch_size", base.batch_size);
        set("seed", base.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("ranker config: ") + e.what());
    }
    return base;
}

RankerConfig RankerConfig::from_json(const nlohmann::json& j) {
    return from_json(j, RankerConfig{});
}

RankerParams::RankerParams(std::size_t dim, std::size_t hidden) : dim_(dim), hidden_(hidden) {
    offsets_[0] = 0;
    for (std::size_t t = 0; t < kTensorCount; ++t) {
        offsets_[t + 1] = offsets_[t] + tensor_size(dim, hidden, t);
    }
    data_.assign(offsets_[kTensorCount], 0.0);
}

std::span<double> RankerParams::operator[](Tensor t) {
    return std::span<double>(data_).subspan(offsets_[t], offsets_[t + 1] - offsets_[t]);
}

std::span<const double> RankerParams::operator[](Tensor t) const {
    return std::span<const double>(data_).subspan(offsets_[t], offsets_[t + 1] - offsets_[t]);
}

std::pair<std::size_t, std::size_t> RankerParams::shape(Tensor t) const {
    const std::size_t m = dim_;
    const std::size_t h = hidden_;
    switch (t) {
        case form_w: return {m, m};
        case rel1_w: return {m, 2 * m};
        case rel2_w: return {m, m};
        case head1_w: return {h, 2 * m};
        case head2_w: return {1, h};
        default: return {tensor_size(m, h, t), 1};
    }
}

RankerParams init_params(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
    RankerParams p(dim, hidden);
    Rng rng(seed);
    for (auto t : {RankerParams::form_w, RankerParams::rel1_w, RankerParams::rel2_w,
                   RankerParams::head1_w, RankerParams::head2_w}) {
        const auto [rows, cols] = p.shape(t);
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (auto& w : p[t]) w = rng.uniform(-limit, limit);
    }
    return p;
}

ForwardResult forward(const RankerParams& params, const EmbeddingRecord& x,
                      const EmbeddingRecord& y) {
    auto a = run_forward(params, x, y);
    return {a.score, std::move(a.v_p), std::move(a.v_c)};
}

double ranking_loss(double s_d, double s_r, double s_h, double alpha, PairMask mask) {
    double loss = 0.0;
    if (mask.direct_referenced) loss += hinge(alpha - s_d + s_r);
    if (mask.referenced_human) loss += hinge(alpha - s_r + s_h);
    if (mask.direct_human) loss += hinge(alpha - s_d + s_h);
    return loss;
}

double rep_loss(std::span<const double> vp_d, std::span<const double> vp_r,
                std::span<const double> vp_h, std::span<const double> vc_d,
                std::span<const double> vc_r, std::span<const double> vc_h, double beta_p,
                double beta_c, double lambda_p, double lambda_c) {
    double loss = 0.0;
    if (lambda_p != 0.0) {
        loss += lambda_p * hinge(distance(vp_d, vp_r) - distance(vp_r, vp_h) + beta_p);
    }
    if (lambda_c != 0.0) {
        loss += lambda_c * hinge(distance(vc_h, vc_r) - distance(vc_d, vc_h) + beta_c);
    }
    return loss;
}

std::vector<TripletView> resolve_triplets(const TripletSet& ts, const EmbeddingStore& store) {
    std::vector<TripletView> out;
    out.reserve(ts.size());
    std::vector<std::string> missing;
    for (const auto& t : ts.records) {
        auto get = [&](Role role) -> const EmbeddingRecord* {
            auto key = text_key(t.id, role);
            const auto* rec = store.find(key);
            if (rec == nullptr) missing.push_back(std::move(key));
            return rec;
        };
        TripletView v;
        v.instruction = get(Role::instruction);
        v.direct = get(Role::direct);
        v.referenced = get(Role::referenced);
        v.human = get(Role::human);
        out.push_back(v);
    }
    if (!missing.empty()) {
        std::string msg = "missing embeddings for " + std::to_string(missing.size()) + " texts:";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
        if (missing.size() > 10) msg += " ...";
        fail(ErrorKind::lookup, msg);
    }
    return out;
}

double total_loss(const RankerParams& params, std::span<const TripletView> batch,
                  std::span<const PairMask> masks, const RankerConfig& cfg) {
    if (batch.empty()) fail(ErrorKind::argument, "total_loss: empty batch");
    check_masks(batch, masks);
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        sum += triplet_loss(params, batch[i], masks.empty() ? PairMask{} : masks[i], cfg, nullptr,
                            0.0);
    }
    return sum / static_cast<double>(batch.size());
}

LossAndGrad loss_and_grad(const RankerParams& params, std::span<const TripletView> batch,
                          std::span<const PairMask> masks, const RankerConfig& cfg) {
    if (batch.empty()) fail(ErrorKind::argument, "grad: empty batch");
    check_masks(batch, masks);
    LossAndGrad out{0.0, RankerParams(params.dim(), params.hidden())};
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        sum += triplet_loss(params, batch[i], masks.empty() ? PairMask{} : masks[i], cfg,
                            &out.grad, scale);
    }
    out.loss = sum / static_cast<double>(batch.size());
    return out;
}

RankerParams grad(const RankerParams& params, std::span<const TripletView> batch,
                  std::span<const PairMask> masks, const RankerConfig& cfg) {
    return loss_and_grad(params, batch, masks, cfg).grad;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
    if (params.size() != grads.size()) fail(ErrorKind::shape, "adam_step: gradient size mismatch");
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        fail(ErrorKind::shape, "adam_step: optimizer state size mismatch");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = AdamState::beta1 * state.m[i] + (1.0 - AdamState::beta1) * g;
        state.v[i] = AdamState::beta2 * state.v[i] + (1.0 - AdamState::beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::eps);
    }
}

void adam_step(RankerParams& params, const RankerParams& grads, AdamState& state, double lr) {
    if (params.dim() != grads.dim() || params.hidden() != grads.hidden()) {
        fail(ErrorKind::shape, "adam_step: gradient shape mismatch");
    }
    adam_step(params.flat(), grads.flat(), state, lr);
}

nlohmann::ordered_json EvalResult::to_json() const {
    nlohmann::ordered_json j;
    j["acc_full"] = acc_full;
    j["acc_dr"] = acc_dr;
    j["acc_rh"] = acc_rh;
    j["n"] = n;
    return j;
}

EvalResult evaluate(const RankerParams& params, std::span<const TripletView> triplets) {
    if (triplets.empty()) fail(ErrorKind::argument, "evaluate: empty test set");
    std::size_t full = 0;
    std::size_t dr = 0;
    std::size_t rh = 0;
    for (const auto& t : triplets) {
        const double s_d = run_forward(params, *t.instruction, *t.direct).score;
        const double s_r = run_forward(params, *t.instruction, *t.referenced).score;
        const double s_h = run_forward(params, *t.instruction, *t.human).score;
        const bool ok_dr = s_d > s_r;
        const bool ok_rh = s_r > s_h;
        dr += ok_dr ? 1 : 0;
        rh += ok_rh ? 1 : 0;
        full += ok_dr && ok_rh ? 1 : 0;
    }
    const auto n = static_cast<double>(triplets.size());
    return {static_cast<double>(full) / n, static_cast<double>(dr) / n,
            static_cast<double>(rh) / n, triplets.size()};
}

EvalResult evaluate(const RankerParams& params, const TripletSet& test,
                    const EmbeddingStore& store) {
    if (test.empty()) fail(ErrorKind::argument, "evaluate: empty test set");
    return evaluate(params, resolve_triplets(test, store));
}

nlohmann::ordered_json TrainHistory::to_json() const {
    nlohmann::ordered_json j;
    j["initial_train_loss"] = initial_train_loss;
    auto epochs_json = nlohmann::ordered_json::array();
    for (const auto& e : epochs) {
        nlohmann::ordered_json row;
        row["epoch"] = e.epoch;
        row["train_loss"] = e.train_loss;
        row["val"] = e.val.to_json();
        epochs_json.push_back(std::move(row));
    }
    j["epochs"] = std::move(epochs_json);
    j["epochs_run"] = epochs_run;
    j["best_epoch"] = best_epoch;
    j["stopped_early"] = stopped_early;
    return j;
}

std::vector<PairMask> build_masks(const TripletSet& ts, const QualityTable* quality,
                                  double sigma) {
    std::vector<PairMask> masks;
    masks.reserve(ts.size());
    for (const auto& t : ts.records) {
        masks.push_back(quality == nullptr ? PairMask{} : pair_mask(t.id, *quality, sigma));
    }
    return masks;
}

TrainResult train(const TripletSet& train_set, const TripletSet& val_set,
                  const EmbeddingStore& store, const QualityTable* quality,
                  const RankerConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) fail(ErrorKind::argument, "train: empty training set");
    if (store.dim() != cfg.dim) {
        fail(ErrorKind::shape, "embedding store dimension " + std::to_string(store.dim()) +
                                   " does not match ranker dim " + std::to_string(cfg.dim));
    }
    const auto views = resolve_triplets(train_set, store);
    const auto val_views = val_set.empty() ? std::vector<TripletView>{}
                                           : resolve_triplets(val_set, store);
    const auto masks = build_masks(train_set, quality, cfg.sigma);
    if (std::none_of(masks.begin(), masks.end(), [](const PairMask& m) { return m.any(); })) {
        fail(ErrorKind::degenerate_data,
             "quality threshold masks every ranking pair; nothing to train on");
    }

    TrainResult out{init_params(cfg.dim, cfg.hidden, cfg.seed), {}};
    auto& history = out.history;
    history.initial_train_loss = total_loss(out.params, views, masks, cfg);

    RankerParams params = out.params;
    AdamState adam;
    Rng shuffle_rng(mix64(cfg.seed ^ 0x53485546464c45ULL));
    std::vector<std::size_t> order(views.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<TripletView> batch;
    std::vector<PairMask> batch_masks;
    double best_acc = -1.0;
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            batch_masks.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(views[order[k]]);
                batch_masks.push_back(masks[order[k]]);
            }
            const auto lg = loss_and_grad(params, batch, batch_masks, cfg);
            adam_step(params, lg.grad, adam, cfg.lr);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total_loss(params, views, masks, cfg);
        history.epochs_run = epoch;
        if (!val_views.empty()) {
            rec.val = evaluate(params, val_views);
            if (rec.val.acc_full > best_acc) {
                best_acc = rec.val.acc_full;
                since_best = 0;
                out.params = params;
                history.best_epoch = epoch;
            } else {
                ++since_best;
            }
        } else {
            out.params = params;
            history.best_epoch = epoch;
        }
        history.epochs.push_back(rec);
        if (!val_views.empty() && since_best >= cfg.patience) {
            history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    return out;
}

double score(const RankerParams& params, const EmbeddingStore& store,
             std::string_view instruction_key, std::string_view response_key) {
    return run_forward(params, store.at(instruction_key), store.at(response_key)).score;
}

double score_example(const RankerParams& params, const EmbeddingStore& store,
                     std::string_view example_id) {
    return score(params, store, text_key(example_id, Role::instruction),
                 text_key(example_id, Role::response));
}

std::vector<std::uint8_t> encode_params(const RankerParams& params) {
    std::vector<std::uint8_t> out(kParamsMagic.begin(), kParamsMagic.end());
    auto put = [&](std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put(kParamsVersion, 4);
    put(params.dim(), 4);
    put(params.hidden(), 4);
    for (double w : params.flat()) put(std::bit_cast<std::uint64_t>(w), 8);
    return out;
}

RankerParams decode_params(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t header = 8 + 4 + 4 + 4;
    if (bytes.size() < header) fail(ErrorKind::corruption, "params file truncated");
    if (!std::equal(kParamsMagic.begin(), kParamsMagic.end(), bytes.begin())) {
        fail(ErrorKind::format, "not a SCARPAR1 file (bad magic)");
    }
    auto get = [&](std::size_t off, int n) {
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
        return v;
    };
    if (get(8, 4) != kParamsVersion) fail(ErrorKind::format, "unsupported SCARPAR1 version");
    const auto m = static_cast<std::size_t>(get(12, 4));
    const auto h = static_cast<std::size_t>(get(16, 4));
    if (m == 0 || h == 0) fail(ErrorKind::format, "SCARPAR1 dimensions must be >= 1");
    if (m > (1U << 16) || h > (1U << 20)) fail(ErrorKind::corruption, "SCARPAR1 dimensions implausibly large");
    std::uint64_t count = 0;
    for (std::size_t t = 0; t < RankerParams::kTensorCount; ++t) count += tensor_size(m, h, t);
    if (bytes.size() - header != count * 8) {
        fail(ErrorKind::corruption, "SCARPAR1 size does not match its dimensions");
    }
    RankerParams p(m, h);
    auto flat = p.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
        flat[i] = std::bit_cast<double>(get(header + 8 * i, 8));
        if (!std::isfinite(flat[i])) fail(ErrorKind::corruption, "SCARPAR1 has a non-finite weight");
    }
    return p;
}

void save_params(const RankerParams& params, const std::filesystem::path& path) {
    const auto bytes = encode_params(params);
    jsonl::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
}

RankerParams load_params(const std::filesystem::path& path) {
    const auto contents = jsonl::read_file(path);
    return decode_params(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(contents.data()), contents.size()));
}

}  // namespace scar
