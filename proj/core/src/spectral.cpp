#include "trimshift/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trimshift/errors.hpp"
#include "trimshift/rng.hpp"

namespace trimshift {

namespace {

constexpr int kMaxTransferDepth = 12;
constexpr std::size_t kMaxGapDim = 4096;

bool lex_less(std::span<const Symbol> a, std::span<const Symbol> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

WordIndex::WordIndex(const ShiftSystem& system, int depth) : system_(system), depth_(depth) {
    if (depth < 0) throw DomainError("WordIndex: depth must be nonnegative");
    if (depth > kMaxTransferDepth)
        throw ResourceError("WordIndex: depth " + std::to_string(depth) +
                            " exceeds the supported maximum of " +
                            std::to_string(kMaxTransferDepth));
    const auto words = enumerate_words(system, depth, std::size_t{1} << 20);
    count_ = words.size();
    flat_.reserve(count_ * static_cast<std::size_t>(depth));
    for (const auto& w : words) flat_.insert(flat_.end(), w.begin(), w.end());
}

std::size_t WordIndex::rank(std::span<const Symbol> w) const {
    if (w.size() != static_cast<std::size_t>(depth_))
        throw DomainError("WordIndex::rank: word length does not match the index depth");
    std::size_t lo = 0, hi = count_;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (lex_less(word(mid), w))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < count_ && std::ranges::equal(word(lo), w)) return lo;
    return count_;
}

std::pair<std::size_t, std::size_t> WordIndex::prefix_range(std::span<const Symbol> prefix) const {
    if (prefix.size() > static_cast<std::size_t>(depth_))
        throw DomainError("WordIndex::prefix_range: prefix longer than the index depth");
    const auto cmp_prefix = [&](std::size_t i) {
        // -1 if word(i) < prefix-block, 0 if it extends prefix, +1 if beyond.
        const auto w = word(i);
        for (std::size_t j = 0; j < prefix.size(); ++j) {
            if (w[j] < prefix[j]) return -1;
            if (w[j] > prefix[j]) return 1;
        }
        return 0;
    };
    std::size_t lo = 0, hi = count_;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cmp_prefix(mid) < 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    const std::size_t begin = lo;
    hi = count_;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cmp_prefix(mid) <= 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    return {begin, lo};
}

CylinderFunction::CylinderFunction(std::shared_ptr<const WordIndex> index,
                                   std::vector<double> values)
    : index_(std::move(index)), values_(std::move(values)) {
    if (!index_) throw DomainError("CylinderFunction: null index");
    if (values_.size() != index_->size())
        throw DomainError("CylinderFunction: expected " + std::to_string(index_->size()) +
                          " values, got " + std::to_string(values_.size()));
}

CylinderFunction CylinderFunction::from_function(
    std::shared_ptr<const WordIndex> index,
    const std::function<double(std::span<const Symbol>)>& f) {
    if (!index) throw DomainError("CylinderFunction: null index");
    std::vector<double> values(index->size());
    for (std::size_t i = 0; i < index->size(); ++i) values[i] = f(index->word(i));
    return CylinderFunction(std::move(index), std::move(values));
}

TransferMatrix assemble_transfer(const MarkovMeasure& measure, int depth) {
    if (depth < 1 || depth > kMaxTransferDepth)
        throw ResourceError("assemble_transfer: depth must lie in [1, " +
                            std::to_string(kMaxTransferDepth) + "], got " +
                            std::to_string(depth));
    auto index = std::make_shared<const WordIndex>(measure.system(), depth);
    const std::size_t dim = index->size();
    TransferMatrix t{index, std::vector<double>(dim * dim, 0.0)};

    std::vector<Symbol> source(static_cast<std::size_t>(depth));
    for (std::size_t u = 0; u < dim; ++u) {
        const auto target = index->word(u);
        // Preimage branches prepend a symbol a with an edge into the target's
        // first symbol; the source cylinder is (a, target[0..depth-2]).
        for (Symbol a : measure.system().predecessors(target[0])) {
            source[0] = a;
            for (int j = 0; j + 1 < depth; ++j) source[static_cast<std::size_t>(j) + 1] = target[j];
            const std::size_t v = index->rank(source);
            t.entries[u * dim + v] += measure.g_weight(a, target[0]);
        }
    }
    return t;
}

namespace {

void left_apply(const TransferMatrix& t, std::span<const double> x, std::span<double> out) {
    const std::size_t dim = t.dim();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = t.entries.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) out[j] += xi * row[j];
    }
}

} // namespace

EigenPair leading_eigenpair(const TransferMatrix& transfer) {
    const std::size_t dim = transfer.dim();
    EigenPair result;
    std::vector<double> x(dim, 1.0 / static_cast<double>(dim));
    std::vector<double> y(dim, 0.0);
    for (int iter = 1; iter <= 1000000; ++iter) {
        left_apply(transfer, x, y);
        double sum = 0.0;
        for (double v : y) sum += v;
        double diff = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            y[j] /= sum;
            diff = std::max(diff, std::abs(y[j] - x[j]));
        }
        x.swap(y);
        if (diff <= 1e-14) {
            result.lambda = sum;
            result.eigvec = std::move(x);
            result.iterations = iter;
            return result;
        }
    }
    throw ConvergenceError("leading_eigenpair: power iteration did not converge within 1e6 steps");
}

double spectral_gap(const TransferMatrix& transfer) {
    const std::size_t dim = transfer.dim();
    if (dim > kMaxGapDim)
        throw ResourceError("spectral_gap: dimension " + std::to_string(dim) +
                            " exceeds the supported maximum of " + std::to_string(kMaxGapDim));
    const EigenPair lead = leading_eigenpair(transfer);

    // Wielandt deflation: M' = M - lambda (r l^T)/(l r) with r the all-ones
    // right eigenvector and l the leading left eigenvector. Acting on row
    // vectors: x M' = x M - lambda (sum_i x_i) l / (l . r).
    double l_dot_r = 0.0;
    for (double v : lead.eigvec) l_dot_r += v;

    const auto deflated_apply = [&](std::span<const double> x, std::span<double> out) {
        left_apply(transfer, x, out);
        double xs = 0.0;
        for (double v : x) xs += v;
        const double coeff = lead.lambda * xs / l_dot_r;
        for (std::size_t j = 0; j < dim; ++j) out[j] -= coeff * lead.eigvec[j];
    };

    const auto norm2 = [](std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    const auto dot = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };

    // Deterministic start with energy in every direction.
    std::vector<double> x(dim), u(dim), v(dim);
    for (std::size_t i = 0; i < dim; ++i)
        x[i] = static_cast<double>(mix64(i + 1) >> 11) * 0x1.0p-53 - 0.5;
    double xn = norm2(x);
    for (auto& c : x) c /= xn;

    double estimate = std::numeric_limits<double>::infinity();
    int stable = 0;
    for (int iter = 1; iter <= 200000; ++iter) {
        deflated_apply(x, u);
        const double un = norm2(u);
        if (un < 1e-250) return 0.0; // deflated operator is numerically zero
        deflated_apply(u, v);

        // Fit v ~= a u + b x; the dominant eigenvalues of the deflated matrix
        // solve z^2 = a z + b, which covers complex conjugate pairs. Once the
        // iterate settles into a single real eigendirection, u becomes
        // parallel to x, the Gram determinant collapses, and the Rayleigh
        // quotient is the right estimate instead.
        const double uu = dot(u, u), ux = dot(u, x), xx = dot(x, x);
        const double vu = dot(v, u), vx = dot(v, x);
        const double det = uu * xx - ux * ux;
        double current;
        if (det > 1e-12 * uu * xx) {
            const double a = (vu * xx - vx * ux) / det;
            const double b = (uu * vx - ux * vu) / det;
            const double disc = a * a + 4.0 * b;
            if (disc >= 0.0) {
                const double r1 = (a + std::sqrt(disc)) / 2.0;
                const double r2 = (a - std::sqrt(disc)) / 2.0;
                current = std::max(std::abs(r1), std::abs(r2));
            } else {
                current = std::sqrt(-b);
            }
        } else {
            current = std::abs(ux) / xx;
        }

        if (std::abs(current - estimate) <= 1e-13 * std::max(1.0, std::abs(current))) {
            if (++stable >= 20) {
                if (current >= 1.0 - 1e-8)
                    throw GapViolationError("spectral_gap: |lambda_2| = " +
                                            std::to_string(current) +
                                            " is not separated from 1");
                return current;
            }
        } else {
            stable = 0;
        }
        estimate = current;

        for (std::size_t j = 0; j < dim; ++j) x[j] = u[j] / un;
    }
    throw ConvergenceError("spectral_gap: eigenvalue estimate did not settle within 2e5 steps");
}

CylinderFunction apply_transfer(const TransferMatrix& transfer, const CylinderFunction& h) {
    if (h.index_ptr().get() != transfer.index.get() && h.size() != transfer.dim())
        throw DomainError("apply_transfer: function and matrix live on different indices");
    const std::size_t dim = transfer.dim();
    std::vector<double> out(dim, 0.0);
    for (std::size_t u = 0; u < dim; ++u) {
        const double* row = transfer.entries.data() + u * dim;
        double acc = 0.0;
        for (std::size_t vcol = 0; vcol < dim; ++vcol) acc += row[vcol] * h.value(vcol);
        out[u] = acc;
    }
    return CylinderFunction(transfer.index, std::move(out));
}

double oscillation(const CylinderFunction& h, std::span<const Symbol> word) {
    const auto& system = h.index().system();
    for (Symbol s : word) system.check_symbol(s);
    if (!system.admissible(word)) return 0.0; // empty cylinder
    if (word.size() >= static_cast<std::size_t>(h.depth())) return 0.0; // h constant there
    const auto [lo, hi] = h.index().prefix_range(word);
    if (lo >= hi) return 0.0;
    double mn = h.value(lo), mx = h.value(lo);
    for (std::size_t i = lo + 1; i < hi; ++i) {
        mn = std::min(mn, h.value(i));
        mx = std::max(mx, h.value(i));
    }
    return mx - mn;
}

double quasi_holder_seminorm(const CylinderFunction& h, double eps0,
                             const MarkovMeasure& measure) {
    if (!(eps0 > 0.0 && eps0 < 1.0))
        throw DomainError("quasi_holder_seminorm: eps0 must lie in (0,1)");
    const int m = h.depth();
    if (m > kMaxTransferDepth)
        throw ResourceError("quasi_holder_seminorm: depth exceeds the supported maximum");
    if (m == 0) return 0.0;

    // Oscillation-carrying balls are cylinders of depth < m. A depth-d word w
    // is the ball B(eps, x) for x in [w] exactly when mu([w]) < eps <=
    // mu(parent(w)), so the integrand is a step function of eps with jumps on
    // cylinder measures only.
    struct Triple {
        double mu_word;
        double mu_parent;
        double osc;
    };
    std::vector<Triple> triples;
    std::vector<double> breakpoints;
    for (int d = 0; d < m; ++d) {
        const auto words = enumerate_words(measure.system(), d, std::size_t{1} << 20);
        for (const auto& w : words) {
            const double osc = oscillation(h, w);
            if (!(osc > 0.0)) continue;
            const double mu_w = measure.cylinder_measure(w);
            const double mu_p =
                d == 0 ? 2.0 // the whole space is never an eps-ball for eps0 < 1
                       : measure.cylinder_measure(std::span<const Symbol>(w.data(), w.size() - 1));
            triples.push_back({mu_w, mu_p, osc});
            if (mu_w < eps0) breakpoints.push_back(mu_w);
            if (mu_p < eps0) breakpoints.push_back(mu_p);
        }
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    // sup over (0, eps0] is approached as eps decreases to a breakpoint: the
    // limit value at beta keeps words with mu_word <= beta < mu_parent active.
    double sup = 0.0;
    for (double beta : breakpoints) {
        double integral = 0.0;
        for (const auto& t : triples)
            if (t.mu_word <= beta && beta < t.mu_parent) integral += t.mu_word * t.osc;
        sup = std::max(sup, integral / beta);
    }
    return sup;
}

namespace {

std::shared_ptr<const WordIndex> make_index(const MarkovMeasure& measure, int depth) {
    return std::make_shared<const WordIndex>(measure.system(), depth);
}

int first_nonspecial(std::span<const Symbol> w, Symbol special) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] != special) return static_cast<int>(i) + 1;
    return 0; // all special
}

} // namespace

CylinderFunction truncated_level_function(const ReturnTimeObservable& chi,
                                          const MarkovMeasure& measure, double level) {
    if (level < 1.0)
        return CylinderFunction(make_index(measure, 0), {0.0}); // chi >= 1 everywhere
    const int k = chi.floor_level_index(level);
    return CylinderFunction::from_function(
        make_index(measure, k + 1), [&](std::span<const Symbol> w) {
            const int m = first_nonspecial(w, chi.special_symbol());
            if (m == 0) return 0.0; // run continues past k+1 symbols: chi > level
            return chi.level_value(m - 1);
        });
}

CylinderFunction exceedance_indicator(const ReturnTimeObservable& chi,
                                      const MarkovMeasure& measure, double level) {
    if (level <= 1.0) return CylinderFunction(make_index(measure, 0), {1.0});
    const int k = chi.floor_level_index(level);
    const int k_up = (chi.level_value(k) == level) ? k : k + 1; // smallest atom >= level
    return CylinderFunction::from_function(
        make_index(measure, k_up), [&](std::span<const Symbol> w) {
            return first_nonspecial(w, chi.special_symbol()) == 0 ? 1.0 : 0.0;
        });
}

CylinderFunction atom_indicator(const ReturnTimeObservable& chi, const MarkovMeasure& measure,
                                double level) {
    if (level < 1.0) return CylinderFunction(make_index(measure, 0), {0.0});
    const int k = level >= 1.0 ? chi.floor_level_index(level) : 0;
    if (chi.level_value(k) != level)
        return CylinderFunction(make_index(measure, 0), {0.0}); // not an atom
    return CylinderFunction::from_function(
        make_index(measure, k + 1), [&](std::span<const Symbol> w) {
            return first_nonspecial(w, chi.special_symbol()) == k + 1 ? 1.0 : 0.0;
        });
}

PropertyAudit property_f_audit(const ReturnTimeObservable& chi, const MarkovMeasure& measure,
                               double eps0, std::span<const double> levels) {
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw DomainError("property_f_audit: eps0 must lie in (0,1)");
    PropertyAudit audit;
    for (double level : levels) {
        if (!(level > 0.0)) throw DomainError("property_f_audit: levels must be positive");
        PropertyAuditRow row;
        row.level = level;
        row.truncated_ratio =
            quasi_holder_seminorm(truncated_level_function(chi, measure, level), eps0, measure) /
            level;
        row.exceedance_norm =
            quasi_holder_seminorm(exceedance_indicator(chi, measure, level), eps0, measure);
        row.atom_norm = quasi_holder_seminorm(atom_indicator(chi, measure, level), eps0, measure);
        audit.k1_hat = std::max(audit.k1_hat, row.truncated_ratio);
        audit.k2_hat = std::max(audit.k2_hat, row.exceedance_norm);
        audit.k3_hat = std::max(audit.k3_hat, row.atom_norm);
        audit.rows.push_back(row);
    }
    return audit;
}

PropertyAudit property_f_audit(const Observable& chi, const MarkovMeasure& measure, double eps0,
                               std::span<const double> levels) {
    const auto* rt = dynamic_cast<const ReturnTimeObservable*>(&chi);
    if (rt == nullptr)
        throw UnsupportedObservableError(
            "property_f_audit: truncations of the '" + std::string(chi.family()) +
            "' observable are not cylinder-measurable at finite depth");
    return property_f_audit(*rt, measure, eps0, levels);
}

} // namespace trimshift
