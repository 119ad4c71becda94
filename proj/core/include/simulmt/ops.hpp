#pragma once

#include <string>
#include <vector>

#include "simulmt/array.hpp"
#include "simulmt/param_store.hpp"

namespace simulmt {

// Forward/backward primitives for the fixed model family (GRU + additive
// attention + softmax readout). Backward functions accumulate into the
// provided gradient buffers; any of them may be null to skip that input.

/// y = W x + b, W is [out x in], x and b are vectors.
Array affine(const Array& W, const Array& b, const Array& x);
void affine_backward(const Array& W, const Array& x, const Array& dy, Array* dW, Array* db, Array* dx);

/// y += M x (bias-free affine; backward via affine_backward with db = null).
void matvec_acc(const Array& M, const Array& x, Array* y);

/// Copy of row `id` of the [rows x dim] embedding table.
Array embedding_row(const Array& table, int id);
void embedding_row_backward(Array* dtable, int id, const Array& dy);

Array softmax(const Array& logits);
void softmax_backward(const Array& probs, const Array& dprobs, Array* dlogits);

Array tanh_vec(const Array& x);
void tanh_vec_backward(const Array& y, const Array& dy, Array* dx);
Array sigmoid_vec(const Array& x);
void sigmoid_vec_backward(const Array& y, const Array& dy, Array* dx);

Array concat(const Array& a, const Array& b);
void concat_backward(const Array& dy, Array* da, Array* db);

/// Sum_i w[i] * rows[i]; rows must share one shape, |w| == |rows|.
/// With a probability vector w this is attention pooling.
Array weighted_sum(const std::vector<Array>& rows, const Array& w);
void weighted_sum_backward(const std::vector<Array>& rows, const Array& w, const Array& dy,
                           std::vector<Array>* drows, Array* dw);

inline constexpr double kLogFloor = 1e-12;

/// -log(max(probs[target], 1e-12))
double cross_entropy(const Array& probs, int target);
void cross_entropy_backward(const Array& probs, int target, double dloss, Array* dprobs);

double dot(const Array& a, const Array& b);

// --- GRU ------------------------------------------------------------------

/// Weight handles into a ParamStore; create() registers parameters named
/// <prefix>.{wz,uz,bz,wr,ur,br,wc,uc,bc}, bind() attaches to existing ones.
struct GruWeights {
    Parameter* wz = nullptr;
    Parameter* uz = nullptr;
    Parameter* bz = nullptr;
    Parameter* wr = nullptr;
    Parameter* ur = nullptr;
    Parameter* br = nullptr;
    Parameter* wc = nullptr;
    Parameter* uc = nullptr;
    Parameter* bc = nullptr;
    int in_dim = 0;
    int hid_dim = 0;

    static GruWeights create(ParamStore& store, const std::string& prefix, int in_dim, int hid_dim, Rng& rng);
    static GruWeights bind(ParamStore& store, const std::string& prefix, int in_dim, int hid_dim);
};

struct GruCache {
    Array x;
    Array h_prev;
    Array z;  // update gate
    Array r;  // reset gate
    Array c;  // candidate state
};

/// z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br),
/// c = tanh(Wc x + Uc (r*h) + bc), h' = z*h + (1-z)*c.
/// Throws on dimension mismatch or non-finite input.
Array gru_step(const GruWeights& w, const Array& x, const Array& h_prev, GruCache* cache = nullptr);
void gru_step_backward(const GruWeights& w, const GruCache& cache, const Array& dh_new, Array* dx, Array* dh_prev);

}  // namespace simulmt
