#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// Everything here is written with plain loops over std::vector so it shares no
// code path with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major rows

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Mat to_mat(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  Mat m(rows, Vec(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[r][c] = flat[r * cols + c];
  return m;
}

inline Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  Vec y(w.size());
  for (std::size_t r = 0; r < w.size(); ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[r][c] * x[c];
    y[r] = acc;
  }
  return y;
}

inline Vec cat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

struct State {
  Vec h;
  Vec c;
};

/// Binary Tree-LSTM parent, gate rows ordered (i, f_l, f_r, o, g).
inline State tree_compose(const Mat& w, const Vec& b, const State& l, const State& r) {
  const std::size_t H = l.h.size();
  const Vec z = affine(w, b, cat(l.h, r.h));
  State p{Vec(H), Vec(H)};
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(z[k]);
    const double fl = sigmoid(z[H + k]);
    const double fr = sigmoid(z[2 * H + k]);
    const double o = sigmoid(z[3 * H + k]);
    const double g = std::tanh(z[4 * H + k]);
    p.c[k] = fl * l.c[k] + fr * r.c[k] + i * g;
    p.h[k] = o * std::tanh(p.c[k]);
  }
  return p;
}

/// Chain LSTM step, gate rows ordered (i, f, o, g), input [x; h].
inline State lstm_step(const Mat& w, const Vec& b, const Vec& x, const State& s) {
  const std::size_t H = s.h.size();
  const Vec z = affine(w, b, cat(x, s.h));
  State out{Vec(H), Vec(H)};
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(z[k]);
    const double f = sigmoid(z[H + k]);
    const double o = sigmoid(z[2 * H + k]);
    const double g = std::tanh(z[3 * H + k]);
    out.c[k] = f * s.c[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

/// GRU step: rows of the gate matrix are (z, r); candidate reads [x; r*h].
inline Vec gru_step(const Mat& wg, const Vec& bg, const Mat& wn, const Vec& bn, const Vec& x, const Vec& h) {
  const std::size_t H = h.size();
  const Vec zr = affine(wg, bg, cat(x, h));
  Vec rh(H);
  for (std::size_t k = 0; k < H; ++k) rh[k] = sigmoid(zr[H + k]) * h[k];
  const Vec n = affine(wn, bn, cat(x, rh));
  Vec out(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double z = sigmoid(zr[k]);
    const double nk = std::tanh(n[k]);
    out[k] = (1.0 - z) * nk + z * h[k];
  }
  return out;
}

inline double cosine(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Rank of the true candidate by full sort of (similarity desc, index asc).
inline std::vector<std::size_t> brute_force_ranks(const std::vector<Vec>& queries, const std::vector<Vec>& candidates,
                                                  const std::vector<std::size_t>& truth) {
  std::vector<std::size_t> ranks;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t c = 0; c < candidates.size(); ++c) scored.push_back({cosine(queries[q], candidates[c]), c});
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t pos = 0; pos < scored.size(); ++pos) {
      if (scored[pos].second == truth[q]) {
        ranks.push_back(pos + 1);
        break;
      }
    }
  }
  return ranks;
}

inline double median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

inline double recall(const std::vector<std::size_t>& ranks, std::size_t k) {
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vec v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace oracle

/// Trees transcribed from the paper's figures, in the library's S-expression notation.
namespace paper_trees {

// "Deep fried green beans" ingredient tree.
inline const std::string kGreenBeans = "((-4-) green_beans ((-3-) ((-1-) flour eggs) ((-2-) breadcrumbs vegetable_oil)))";

// "Parmesan panko chicken tenders" ingredient tree.
inline const std::string kChickenTenders =
    "((-8-) ((-6-) chicken_tenders ((-3-) ((-2-) salt ((-1-) black_pepper garlic_powder)) eggs))"
    " ((-7-) ((-5-) breadcrumbs parmigiano) ((-4-) vegetable_oil parsley)))";

// Long sentence rendering.
inline const std::string kLongSentence =
    "((-19-) ((-18-) ((-15-) ((-8-) ((-3-) add the) remaining) ((-14-) 1-1/2 ((-12-) ((-10-) teaspoons ((-7-) oil"
    " ((-6-) ((-4-) and the) ((-5-) meat ((-1-) to the)))))  ((-11-) pan and)))) stir-fry)"
    " ((-17-) ((-16-) ((-2-) until the) strips) ((-13-) ((-9-) are just) cooked)))";

// Sentence trees of one recipe, first model (a-d).
inline const std::string kSentenceA1 =
    "((-18-) ((-17-) ((-15-) ((-7-) combine all) ((-11-) ingredients in)) ((-12-) baking ((-8-) pan and)))"
    " ((-16-) marinate ((-14-) in ((-13-) refrigerator ((-10-) ((-9-) , covered)"
    " ((-6-) ((-4-) ((-3-) , for) at) ((-5-) least ((-2-) 2 ((-1-) hours .)))))))))";
inline const std::string kSentenceB1 =
    "((-10-) ((-7-) bake at) ((-9-) 375 ((-8-) degrees ((-6-) , ((-5-) covered ((-4-) , ((-3-) for ((-2-) 30"
    " ((-1-) minutes .)))))))))";
inline const std::string kSentenceC1 = "((-3-) uncover ((-2-) and ((-1-) stir .)))";
inline const std::string kSentenceD1 =
    "((-8-) cover ((-7-) ((-6-) again and) ((-5-) bake ((-4-) for ((-3-) another ((-2-) 15 ((-1-) minutes .)))))))";

// Same sentences, second model (a-d).
inline const std::string kSentenceA2 =
    "((-18-) ((-15-) ((-4-) combine all) ingredients) ((-17-) ((-14-) ((-11-) ((-6-) in baking) pan)"
    " ((-9-) ((-5-) and ((-2-) marinate in)) refrigerator)) ((-16-) ((-13-) ((-10-) ((-8-) , covered) ,)"
    " ((-7-) ((-3-) for ((-1-) at least)) 2)) ((-12-) hours .))))";
inline const std::string kSentenceB2 =
    "((-10-) ((-7-) ((-5-) ((-1-) bake at) 375) degrees) ((-9-) ((-6-) ((-4-) , covered) ((-3-) , ((-2-) for 30)))"
    " ((-8-) minutes .)))";
inline const std::string kSentenceC2 = "((-3-) ((-2-) ((-1-) uncover and) stir) .)";
inline const std::string kSentenceD2 =
    "((-8-) ((-6-) ((-4-) ((-3-) ((-1-) cover again) and) ((-2-) bake for)) ((-5-) another 15)) ((-7-) minutes .))";

}  // namespace paper_trees
