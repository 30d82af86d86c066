#include "mlgt/symnmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mlgt/prng.hpp"

namespace mlgt {

SparseSymMatrix SparseSymMatrix::from_cooccurrence(const CooccurrenceMatrix& cooc) {
    SparseSymMatrix m;
    m.dim = cooc.dim;
    m.entries.reserve(cooc.entries.size());
    for (const auto& e : cooc.entries) {
        m.entries.push_back({e.i, e.j, static_cast<double>(e.count)});
    }
    return m;
}

SparseSymMatrix SparseSymMatrix::from_dense(const std::vector<double>& mat, int dim, double tol) {
    if (dim < 0 || mat.size() != static_cast<std::size_t>(dim) * dim) {
        throw std::invalid_argument("from_dense: size mismatch");
    }
    SparseSymMatrix m;
    m.dim = dim;
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            double a = mat[static_cast<std::size_t>(i) * dim + j];
            double b = mat[static_cast<std::size_t>(j) * dim + i];
            if (std::abs(a - b) > tol) {
                throw std::invalid_argument("from_dense: matrix is not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (a < 0.0) {
                throw std::invalid_argument("from_dense: negative entry");
            }
            if (a != 0.0) m.entries.push_back({i, j, a});
        }
    }
    return m;
}

double SamplingBasis::column_sum(int j) const {
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += at(a, j);
    return s;
}

namespace {

// Sparse column access: per column j, the list of (row index, value) pairs
// covering the full symmetric matrix.
struct ColumnView {
    std::vector<int> off;
    std::vector<int> idx;
    std::vector<double> val;
    std::vector<double> diag;

    ColumnView(const SparseSymMatrix& m) {
        int d = m.dim;
        off.assign(d + 1, 0);
        diag.assign(d, 0.0);
        for (const auto& e : m.entries) {
            if (e.i < 0 || e.j < e.i || e.j >= d) {
                throw std::invalid_argument("symnmf: entry index out of range");
            }
            if (e.value < 0.0 || !std::isfinite(e.value)) {
                throw std::invalid_argument("symnmf: entries must be finite and nonnegative");
            }
            ++off[e.j + 1];
            if (e.i != e.j) ++off[e.i + 1];
            if (e.i == e.j) diag[e.i] = e.value;
        }
        for (int j = 0; j < d; ++j) off[j + 1] += off[j];
        idx.resize(off[d]);
        val.resize(off[d]);
        std::vector<int> cur(off.begin(), off.end() - 1);
        for (const auto& e : m.entries) {
            idx[cur[e.j]] = e.i;
            val[cur[e.j]++] = e.value;
            if (e.i != e.j) {
                idx[cur[e.i]] = e.j;
                val[cur[e.i]++] = e.value;
            }
        }
    }
};

constexpr double kPi = 3.141592653589793238462643383279502884;

// Nonnegative minimizer of g(t) = t^4 + 2 p t^2 + 4 q t (the restriction of
// the objective to one coordinate, shifted so g(0) = 0). Candidates are 0 and
// the nonnegative real roots of g'(t)/4 = t^3 + p t + q.
double best_nonneg_root(double p, double q) {
    double roots[3];
    int nroots = 0;
    double disc = -4.0 * p * p * p - 27.0 * q * q;
    if (disc > 0.0 && p < 0.0) {
        double s = std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (2.0 * p * s);
        arg = std::clamp(arg, -1.0, 1.0);
        double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            roots[nroots++] = 2.0 * s * std::cos(theta - 2.0 * kPi * k / 3.0);
        }
    } else {
        double half_q = q / 2.0;
        double inner = half_q * half_q + p * p * p / 27.0;
        if (inner < 0.0) inner = 0.0;
        double sq = std::sqrt(inner);
        roots[nroots++] = std::cbrt(-half_q + sq) + std::cbrt(-half_q - sq);
    }
    double best_t = 0.0;
    double best_g = 0.0;
    for (int k = 0; k < nroots; ++k) {
        double t = roots[k];
        if (!(t > 0.0)) continue;
        // One Newton step to polish the root of t^3 + p t + q.
        double f = t * t * t + p * t + q;
        double fp = 3.0 * t * t + p;
        if (fp != 0.0) {
            double t2 = t - f / fp;
            if (t2 > 0.0) t = t2;
        }
        double g = ((t * t + 2.0 * p) * t + 4.0 * q) * t;
        if (g < best_g || (g == best_g && t < best_t)) {
            best_g = g;
            best_t = t;
        }
    }
    return best_t;
}

double objective(const SparseSymMatrix& m_mat, const NmfBasis& basis,
                 const std::vector<double>& gram, double m_norm_sq) {
    int m = basis.m;
    int d = basis.d;
    double cross = 0.0;
    for (const auto& e : m_mat.entries) {
        double dot = 0.0;
        for (int t = 0; t < m; ++t) {
            dot += basis.h[static_cast<std::size_t>(t) * d + e.i] *
                   basis.h[static_cast<std::size_t>(t) * d + e.j];
        }
        cross += (e.i == e.j ? 1.0 : 2.0) * e.value * dot;
    }
    double gram_sq = 0.0;
    for (double g : gram) gram_sq += g * g;
    return m_norm_sq - 2.0 * cross + gram_sq;
}

void recompute_gram(const NmfBasis& basis, std::vector<double>& gram) {
    int m = basis.m;
    int d = basis.d;
    gram.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int a = 0; a < m; ++a) {
        const double* ra = &basis.h[static_cast<std::size_t>(a) * d];
        for (int b = a; b < m; ++b) {
            const double* rb = &basis.h[static_cast<std::size_t>(b) * d];
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += ra[j] * rb[j];
            gram[static_cast<std::size_t>(a) * m + b] = s;
            gram[static_cast<std::size_t>(b) * m + a] = s;
        }
    }
}

}  // namespace

NmfBasis symnmf_cd(const SparseSymMatrix& m_mat, int m, const SymNmfConfig& cfg) {
    int d = m_mat.dim;
    if (m < 1) throw std::invalid_argument("symnmf_cd: rank must be positive");
    if (m > d) throw std::invalid_argument("symnmf_cd: rank exceeds matrix dimension");

    ColumnView cols(m_mat);

    double m_norm_sq = 0.0;
    double m_sum = 0.0;
    for (const auto& e : m_mat.entries) {
        double w = (e.i == e.j) ? 1.0 : 2.0;
        m_norm_sq += w * e.value * e.value;
        m_sum += w * e.value;
    }
    double m_mean = m_sum / (static_cast<double>(d) * d);

    NmfBasis basis;
    basis.m = m;
    basis.d = d;
    basis.h.assign(static_cast<std::size_t>(m) * d, 0.0);
    SplitMix64 rng(cfg.seed);
    double scale = std::sqrt(std::max(m_mean, 0.0) / m);
    for (auto& v : basis.h) v = scale * rng.next_double();

    std::vector<double> gram;
    recompute_gram(basis, gram);
    std::vector<double> colsq(d, 0.0);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int a = 0; a < m; ++a) {
            double v = basis.at(a, j);
            s += v * v;
        }
        colsq[j] = s;
    }

    double prev = objective(m_mat, basis, gram, m_norm_sq);
    basis.objective_trace.push_back(prev);

    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        for (int a = 0; a < m; ++a) {
            double gaa = gram[static_cast<std::size_t>(a) * m + a];
            for (int j = 0; j < d; ++j) {
                double x = basis.at(a, j);
                double u = 0.0;
                for (int t = cols.off[j]; t < cols.off[j + 1]; ++t) {
                    u += basis.at(a, cols.idx[t]) * cols.val[t];
                }
                double v = 0.0;
                const double* grow = &gram[static_cast<std::size_t>(a) * m];
                for (int t = 0; t < m; ++t) {
                    v += grow[t] * basis.h[static_cast<std::size_t>(t) * d + j];
                }
                double mjj = cols.diag[j];
                double p = colsq[j] + gaa - 2.0 * x * x - mjj;
                double q = -u + x * mjj + v - x * colsq[j] - x * gaa + x * x * x;
                double nx = best_nonneg_root(p, q);
                double delta = nx - x;
                if (delta == 0.0) continue;
                basis.at(a, j) = nx;
                colsq[j] += 2.0 * x * delta + delta * delta;
                double* ga = &gram[static_cast<std::size_t>(a) * m];
                for (int t = 0; t < m; ++t) {
                    if (t == a) continue;
                    double upd = delta * basis.h[static_cast<std::size_t>(t) * d + j];
                    ga[t] += upd;
                    gram[static_cast<std::size_t>(t) * m + a] += upd;
                }
                gaa += 2.0 * x * delta + delta * delta;
                ga[a] = gaa;
            }
            gram[static_cast<std::size_t>(a) * m + a] = gaa;
        }
        recompute_gram(basis, gram);
        double cur = objective(m_mat, basis, gram, m_norm_sq);
        basis.objective_trace.push_back(cur);
        double denom = std::max(std::abs(prev), 1e-12);
        bool converged = std::abs(prev - cur) / denom < cfg.tol;
        prev = cur;
        if (converged) break;
    }
    return basis;
}

NmfBasis symnmf_cd(const CooccurrenceMatrix& cooc, int m, const SymNmfConfig& cfg) {
    return symnmf_cd(SparseSymMatrix::from_cooccurrence(cooc), m, cfg);
}

SamplingBasis reweight_columns(const NmfBasis& basis, int c) {
    if (c < 1) throw std::invalid_argument("reweight_columns: target weight must be positive");
    int m = basis.m;
    int d = basis.d;
    SamplingBasis out;
    out.m = m;
    out.d = d;
    out.target_weight = c;
    out.h.assign(static_cast<std::size_t>(m) * d, 0.0);

    std::vector<double> col(m);
    for (int j = 0; j < d; ++j) {
        double sum = 0.0;
        for (int a = 0; a < m; ++a) {
            double v = basis.at(a, j);
            if (v < 0.0) throw std::invalid_argument("reweight_columns: negative entry");
            col[a] = v;
            sum += v;
        }
        if (sum == 0.0) {
            double fill = std::min(1.0, static_cast<double>(c) / m);
            for (int a = 0; a < m; ++a) col[a] = fill;
        } else {
            double f = static_cast<double>(c) / sum;
            for (int a = 0; a < m; ++a) col[a] *= f;
        }
        for (int round = 0; round < 50; ++round) {
            double excess = 0.0;
            double open = 0.0;
            for (int a = 0; a < m; ++a) {
                if (col[a] > 1.0) {
                    excess += col[a] - 1.0;
                    col[a] = 1.0;
                } else if (col[a] > 0.0 && col[a] < 1.0) {
                    open += col[a];
                }
            }
            if (excess <= 1e-12 || open <= 0.0) break;
            double f = excess / open;
            for (int a = 0; a < m; ++a) {
                if (col[a] > 0.0 && col[a] < 1.0) col[a] += f * col[a];
            }
        }
        for (int a = 0; a < m; ++a) {
            out.h[static_cast<std::size_t>(a) * d + j] = std::min(col[a], 1.0);
        }
    }
    return out;
}

std::vector<std::vector<int>> sample_columns(const SamplingBasis& basis, std::uint64_t seed) {
    int m = basis.m;
    int d = basis.d;
    std::vector<std::vector<int>> cols(d);
    for (int j = 0; j < d; ++j) {
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        for (int a = 0; a < m; ++a) {
            if (rng.bernoulli(basis.at(a, j))) cols[j].push_back(a);
        }
    }
    return cols;
}

void dump_basis(const NmfBasis& basis, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << basis.m << " " << basis.d << "\n";
    char buf[64];
    for (int j = 0; j < basis.d; ++j) {
        for (int a = 0; a < basis.m; ++a) {
            std::snprintf(buf, sizeof(buf), "%.17g", basis.at(a, j));
            out << buf << "\n";
        }
    }
}

}  // namespace mlgt
