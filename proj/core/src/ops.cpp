#include "simulmt/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace simulmt {

namespace {

void check_vec(const Array& a, int n, const char* what) {
    if (a.rank() != 1 || a.dim(0) != n)
        throw std::runtime_error(std::string(what) + ": expected vector of length " + std::to_string(n) + ", got " +
                                 shape_string(a.shape()));
}

// y += M x   (M is [rows x cols], x has cols entries)
void matvec_acc(const Array& M, const double* x, double* y) {
    const int rows = M.dim(0), cols = M.dim(1);
    const double* m = M.data();
    for (int i = 0; i < rows; ++i) {
        const double* row = m + static_cast<std::size_t>(i) * cols;
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

// y += M^T x   (x has rows entries, y has cols entries)
void matvec_t_acc(const Array& M, const double* x, double* y) {
    const int rows = M.dim(0), cols = M.dim(1);
    const double* m = M.data();
    for (int i = 0; i < rows; ++i) {
        const double* row = m + static_cast<std::size_t>(i) * cols;
        const double xi = x[i];
        for (int j = 0; j < cols; ++j) y[j] += xi * row[j];
    }
}

// dM += dy x^T
void outer_acc(Array& dM, const double* dy, const double* x) {
    const int rows = dM.dim(0), cols = dM.dim(1);
    double* m = dM.data();
    for (int i = 0; i < rows; ++i) {
        double* row = m + static_cast<std::size_t>(i) * cols;
        const double di = dy[i];
        for (int j = 0; j < cols; ++j) row[j] += di * x[j];
    }
}

}  // namespace

Array affine(const Array& W, const Array& b, const Array& x) {
    if (W.rank() != 2) throw std::runtime_error("affine: W must be a matrix");
    check_vec(x, W.dim(1), "affine x");
    check_vec(b, W.dim(0), "affine b");
    Array y({W.dim(0)});
    for (int i = 0; i < W.dim(0); ++i) y[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)];
    matvec_acc(W, x.data(), y.data());
    return y;
}

void affine_backward(const Array& W, const Array& x, const Array& dy, Array* dW, Array* db, Array* dx) {
    check_vec(dy, W.dim(0), "affine dy");
    if (dW) outer_acc(*dW, dy.data(), x.data());
    if (db)
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += dy[i];
    if (dx) matvec_t_acc(W, dy.data(), dx->data());
}

void matvec_acc(const Array& M, const Array& x, Array* y) {
    check_vec(x, M.dim(1), "matvec x");
    check_vec(*y, M.dim(0), "matvec y");
    matvec_acc(M, x.data(), y->data());
}

Array embedding_row(const Array& table, int id) {
    if (table.rank() != 2) throw std::runtime_error("embedding_row: table must be a matrix");
    if (id < 0 || id >= table.dim(0))
        throw std::runtime_error("embedding_row: id " + std::to_string(id) + " out of range [0," +
                                 std::to_string(table.dim(0)) + ")");
    const int d = table.dim(1);
    Array out({d});
    const double* src = table.data() + static_cast<std::size_t>(id) * d;
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = src[j];
    return out;
}

void embedding_row_backward(Array* dtable, int id, const Array& dy) {
    const int d = dtable->dim(1);
    check_vec(dy, d, "embedding dy");
    double* dst = dtable->data() + static_cast<std::size_t>(id) * d;
    for (int j = 0; j < d; ++j) dst[j] += dy[static_cast<std::size_t>(j)];
}

Array softmax(const Array& logits) {
    if (logits.rank() != 1 || logits.size() == 0) throw std::runtime_error("softmax: need a non-empty vector");
    Array p(logits.shape());
    double mx = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
    return p;
}

void softmax_backward(const Array& probs, const Array& dprobs, Array* dlogits) {
    double inner = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) inner += dprobs[i] * probs[i];
    for (std::size_t i = 0; i < probs.size(); ++i) (*dlogits)[i] += probs[i] * (dprobs[i] - inner);
}

Array tanh_vec(const Array& x) {
    Array y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

void tanh_vec_backward(const Array& y, const Array& dy, Array* dx) {
    for (std::size_t i = 0; i < y.size(); ++i) (*dx)[i] += dy[i] * (1.0 - y[i] * y[i]);
}

Array sigmoid_vec(const Array& x) {
    Array y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return y;
}

void sigmoid_vec_backward(const Array& y, const Array& dy, Array* dx) {
    for (std::size_t i = 0; i < y.size(); ++i) (*dx)[i] += dy[i] * y[i] * (1.0 - y[i]);
}

Array concat(const Array& a, const Array& b) {
    Array out({static_cast<int>(a.size() + b.size())});
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) out[k++] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[k++] = b[i];
    return out;
}

void concat_backward(const Array& dy, Array* da, Array* db) {
    const std::size_t na = da ? da->size() : dy.size() - (db ? db->size() : 0);
    std::size_t k = 0;
    if (da)
        for (std::size_t i = 0; i < na; ++i) (*da)[i] += dy[k++];
    else
        k = na;
    if (db)
        for (std::size_t i = 0; i < db->size(); ++i) (*db)[i] += dy[k++];
}

Array weighted_sum(const std::vector<Array>& rows, const Array& w) {
    if (rows.empty()) throw std::runtime_error("weighted_sum: no rows");
    check_vec(w, static_cast<int>(rows.size()), "weighted_sum weights");
    Array out(rows[0].shape());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].same_shape(out)) throw std::runtime_error("weighted_sum: row shape mismatch");
        const double wi = w[i];
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += wi * rows[i][j];
    }
    return out;
}

void weighted_sum_backward(const std::vector<Array>& rows, const Array& w, const Array& dy,
                           std::vector<Array>* drows, Array* dw) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (dw) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dy.size(); ++j) acc += dy[j] * rows[i][j];
            (*dw)[i] += acc;
        }
        if (drows) {
            const double wi = w[i];
            for (std::size_t j = 0; j < dy.size(); ++j) (*drows)[i][j] += wi * dy[j];
        }
    }
}

double cross_entropy(const Array& probs, int target) {
    if (target < 0 || static_cast<std::size_t>(target) >= probs.size())
        throw std::runtime_error("cross_entropy: target out of range");
    return -std::log(std::max(probs[static_cast<std::size_t>(target)], kLogFloor));
}

void cross_entropy_backward(const Array& probs, int target, double dloss, Array* dprobs) {
    const double p = probs[static_cast<std::size_t>(target)];
    if (p > kLogFloor) (*dprobs)[static_cast<std::size_t>(target)] += dloss * (-1.0 / p);
}

double dot(const Array& a, const Array& b) {
    if (a.size() != b.size()) throw std::runtime_error("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

GruWeights GruWeights::create(ParamStore& store, const std::string& prefix, int in_dim, int hid_dim, Rng& rng) {
    GruWeights w;
    w.in_dim = in_dim;
    w.hid_dim = hid_dim;
    w.wz = &store.add(prefix + ".wz", {hid_dim, in_dim}, Init::kUniform, &rng);
    w.uz = &store.add(prefix + ".uz", {hid_dim, hid_dim}, Init::kUniform, &rng);
    w.bz = &store.add(prefix + ".bz", {hid_dim});
    w.wr = &store.add(prefix + ".wr", {hid_dim, in_dim}, Init::kUniform, &rng);
    w.ur = &store.add(prefix + ".ur", {hid_dim, hid_dim}, Init::kUniform, &rng);
    w.br = &store.add(prefix + ".br", {hid_dim});
    w.wc = &store.add(prefix + ".wc", {hid_dim, in_dim}, Init::kUniform, &rng);
    w.uc = &store.add(prefix + ".uc", {hid_dim, hid_dim}, Init::kUniform, &rng);
    w.bc = &store.add(prefix + ".bc", {hid_dim});
    return w;
}

GruWeights GruWeights::bind(ParamStore& store, const std::string& prefix, int in_dim, int hid_dim) {
    GruWeights w;
    w.in_dim = in_dim;
    w.hid_dim = hid_dim;
    w.wz = &store.param(prefix + ".wz");
    w.uz = &store.param(prefix + ".uz");
    w.bz = &store.param(prefix + ".bz");
    w.wr = &store.param(prefix + ".wr");
    w.ur = &store.param(prefix + ".ur");
    w.br = &store.param(prefix + ".br");
    w.wc = &store.param(prefix + ".wc");
    w.uc = &store.param(prefix + ".uc");
    w.bc = &store.param(prefix + ".bc");
    require_shape(w.wz->value, {hid_dim, in_dim}, prefix + ".wz");
    require_shape(w.uz->value, {hid_dim, hid_dim}, prefix + ".uz");
    return w;
}

Array gru_step(const GruWeights& w, const Array& x, const Array& h_prev, GruCache* cache) {
    check_vec(x, w.in_dim, "gru x");
    check_vec(h_prev, w.hid_dim, "gru h_prev");
    require_finite(x, "gru input");
    require_finite(h_prev, "gru hidden state");

    const int h = w.hid_dim;
    Array z({h}), r({h}), rh({h}), c({h});

    Array pre_z = affine(w.wz->value, w.bz->value, x);
    matvec_acc(w.uz->value, h_prev.data(), pre_z.data());
    z = sigmoid_vec(pre_z);

    Array pre_r = affine(w.wr->value, w.br->value, x);
    matvec_acc(w.ur->value, h_prev.data(), pre_r.data());
    r = sigmoid_vec(pre_r);

    for (int i = 0; i < h; ++i) rh[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] * h_prev[static_cast<std::size_t>(i)];
    Array pre_c = affine(w.wc->value, w.bc->value, x);
    matvec_acc(w.uc->value, rh.data(), pre_c.data());
    c = tanh_vec(pre_c);

    Array h_new({h});
    for (int i = 0; i < h; ++i) {
        const auto k = static_cast<std::size_t>(i);
        h_new[k] = z[k] * h_prev[k] + (1.0 - z[k]) * c[k];
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->c = std::move(c);
    }
    return h_new;
}

void gru_step_backward(const GruWeights& w, const GruCache& cache, const Array& dh_new, Array* dx, Array* dh_prev) {
    const int h = w.hid_dim;
    check_vec(dh_new, h, "gru dh_new");
    const Array &z = cache.z, &r = cache.r, &c = cache.c, &hp = cache.h_prev, &x = cache.x;

    Array dz({h}), dc({h}), dh({h});
    for (int i = 0; i < h; ++i) {
        const auto k = static_cast<std::size_t>(i);
        dz[k] = dh_new[k] * (hp[k] - c[k]);
        dh[k] = dh_new[k] * z[k];
        dc[k] = dh_new[k] * (1.0 - z[k]);
    }

    // candidate path: c = tanh(Wc x + Uc (r*h) + bc)
    Array dpre_c({h});
    tanh_vec_backward(c, dc, &dpre_c);
    affine_backward(w.wc->value, x, dpre_c, &w.wc->grad, &w.bc->grad, dx);
    Array rh({h}), drh({h});
    for (int i = 0; i < h; ++i) rh[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] * hp[static_cast<std::size_t>(i)];
    affine_backward(w.uc->value, rh, dpre_c, &w.uc->grad, nullptr, &drh);
    Array dr({h});
    for (int i = 0; i < h; ++i) {
        const auto k = static_cast<std::size_t>(i);
        dr[k] = drh[k] * hp[k];
        dh[k] += drh[k] * r[k];
    }

    // gates
    Array dpre_z({h}), dpre_r({h});
    sigmoid_vec_backward(z, dz, &dpre_z);
    sigmoid_vec_backward(r, dr, &dpre_r);
    affine_backward(w.wz->value, x, dpre_z, &w.wz->grad, &w.bz->grad, dx);
    affine_backward(w.uz->value, hp, dpre_z, &w.uz->grad, nullptr, &dh);
    affine_backward(w.wr->value, x, dpre_r, &w.wr->grad, &w.br->grad, dx);
    affine_backward(w.ur->value, hp, dpre_r, &w.ur->grad, nullptr, &dh);

    if (dh_prev)
        for (int i = 0; i < h; ++i) (*dh_prev)[static_cast<std::size_t>(i)] += dh[static_cast<std::size_t>(i)];
}

}  // namespace simulmt
