#include "trimshift/shift.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace trimshift {

namespace {

// Boolean matrix product on uint64 row masks.
std::vector<std::uint64_t> bool_mul(const std::vector<std::uint64_t>& a,
                                    const std::vector<std::uint64_t>& b, int k) {
    std::vector<std::uint64_t> c(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
        std::uint64_t row = a[i];
        std::uint64_t acc = 0;
        while (row != 0) {
            const int j = std::countr_zero(row);
            row &= row - 1;
            acc |= b[j];
        }
        c[i] = acc;
    }
    return c;
}

} // namespace

TransitionReport validate_transition(std::span<const int> row_major, int k) {
    if (k <= 0) throw InvalidMatrixError("validate_transition: alphabet size must be positive");
    if (k > 64)
        throw ResourceError("validate_transition: alphabet size " + std::to_string(k) +
                            " exceeds the supported maximum of 64");
    if (row_major.size() != static_cast<std::size_t>(k) * k)
        throw InvalidMatrixError("validate_transition: expected " + std::to_string(k * k) +
                                 " entries, got " + std::to_string(row_major.size()));

    std::vector<std::uint64_t> adj(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const int e = row_major[static_cast<std::size_t>(i) * k + j];
            if (e != 0 && e != 1)
                throw InvalidMatrixError("validate_transition: entry (" + std::to_string(i) + "," +
                                         std::to_string(j) + ") is " + std::to_string(e) +
                                         ", expected 0 or 1");
            if (e == 1) adj[i] |= (std::uint64_t{1} << j);
        }
    }

    const std::uint64_t full = (k == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);

    // Walk A^n for n = 1..k^2, accumulating reachability and the gcd of
    // diagonal return times. Every simple cycle shows up on the diagonal
    // within these powers, so the gcd equals the period for irreducible
    // matrices.
    std::vector<std::uint64_t> power = adj;
    std::vector<std::uint64_t> reach(static_cast<std::size_t>(k), 0);
    int gcd = 0;
    const int max_power = k * k;
    for (int n = 1; n <= max_power; ++n) {
        bool all_reached = true;
        for (int i = 0; i < k; ++i) {
            reach[i] |= power[i];
            if (power[i] & (std::uint64_t{1} << i)) gcd = std::gcd(gcd, n);
            if (reach[i] != full) all_reached = false;
        }
        if (all_reached && gcd == 1) break;
        if (n < max_power) power = bool_mul(power, adj, k);
    }

    bool irreducible = true;
    for (int i = 0; i < k; ++i)
        if (reach[i] != full) irreducible = false;

    return TransitionReport{irreducible, gcd};
}

ShiftSystem::ShiftSystem(int alphabet_size, std::span<const int> transition_row_major,
                         double theta)
    : k_(alphabet_size), theta_(theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw DomainError("ShiftSystem: theta must lie in (0,1), got " + std::to_string(theta));

    const TransitionReport report = validate_transition(transition_row_major, alphabet_size);

    adj_.assign(static_cast<std::size_t>(k_) * k_, 0);
    succ_.assign(k_, {});
    pred_.assign(k_, {});
    std::vector<int> row_ones(k_, 0), col_ones(k_, 0);
    for (int i = 0; i < k_; ++i) {
        for (int j = 0; j < k_; ++j) {
            const int e = transition_row_major[static_cast<std::size_t>(i) * k_ + j];
            adj_[static_cast<std::size_t>(i) * k_ + j] = static_cast<std::uint8_t>(e);
            if (e == 1) {
                row_ones[i]++;
                col_ones[j]++;
                succ_[i].push_back(static_cast<Symbol>(j));
                pred_[j].push_back(static_cast<Symbol>(i));
            }
        }
    }
    for (int i = 0; i < k_; ++i) {
        if (row_ones[i] == 0)
            throw InvalidMatrixError("ShiftSystem: symbol " + std::to_string(i) +
                                     " has no outgoing transition");
        if (col_ones[i] == 0)
            throw InvalidMatrixError("ShiftSystem: symbol " + std::to_string(i) +
                                     " has no incoming transition");
    }
    if (!report.irreducible)
        throw InvalidMatrixError("ShiftSystem: transition matrix is reducible");
    if (report.period != 1)
        throw InvalidMatrixError("ShiftSystem: transition matrix has period " +
                                 std::to_string(report.period) + ", expected 1");
}

void ShiftSystem::check_symbol(Symbol s) const {
    if (static_cast<int>(s) >= k_)
        throw InvalidSymbolError("symbol " + std::to_string(int(s)) +
                                 " outside alphabet of size " + std::to_string(k_));
}

bool ShiftSystem::admissible(std::span<const Symbol> word) const {
    for (Symbol s : word) check_symbol(s);
    for (std::size_t i = 0; i + 1 < word.size(); ++i)
        if (!edge(word[i], word[i + 1])) return false;
    return true;
}

Word::Word(const ShiftSystem& system, std::vector<Symbol> symbols) : syms_(std::move(symbols)) {
    if (!system.admissible(syms_)) throw DomainError("Word: symbol sequence is not admissible");
}

bool is_admissible(std::span<const Symbol> word, const ShiftSystem& system) {
    return system.admissible(word);
}

double d1_distance(std::span<const Symbol> x_prefix, std::span<const Symbol> y_prefix,
                   double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw DomainError("d1_distance: theta must lie in (0,1)");
    const std::size_t common = std::min(x_prefix.size(), y_prefix.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (x_prefix[i] != y_prefix[i]) return std::pow(theta, static_cast<double>(i));
    }
    throw InsufficientPrefixError(
        "d1_distance: prefixes agree on their stored length; distance undetermined");
}

int d2_ball_depth(std::span<const Symbol> x_prefix, double epsilon,
                  const CylinderMeasureFn& cylinder_measure) {
    if (!(epsilon > 0.0)) throw DomainError("d2_ball_depth: epsilon must be positive");
    for (std::size_t k = 0; k <= x_prefix.size(); ++k) {
        const double m = cylinder_measure(x_prefix.subspan(0, k));
        if (m < epsilon) return static_cast<int>(k);
    }
    throw InsufficientPrefixError(
        "d2_ball_depth: prefix exhausted before the cylinder measure dropped below epsilon");
}

std::vector<Word> admissible_extensions(const ShiftSystem& system, const Word& word) {
    std::vector<Word> out;
    std::vector<Symbol> base(word.symbols().begin(), word.symbols().end());
    const auto push = [&](Symbol s) {
        std::vector<Symbol> next = base;
        next.push_back(s);
        out.emplace_back(system, std::move(next));
    };
    if (word.empty()) {
        for (int s = 0; s < system.alphabet_size(); ++s) push(static_cast<Symbol>(s));
    } else {
        for (Symbol s : system.successors(word.back())) push(s);
    }
    return out;
}

std::vector<std::vector<Symbol>> enumerate_words(const ShiftSystem& system, int length,
                                                 std::size_t max_count) {
    if (length < 0) throw DomainError("enumerate_words: length must be nonnegative");
    std::vector<std::vector<Symbol>> out;
    std::vector<Symbol> cur;
    cur.reserve(static_cast<std::size_t>(length));

    const std::function<void()> rec = [&]() {
        if (cur.size() == static_cast<std::size_t>(length)) {
            if (out.size() >= max_count)
                throw ResourceError("enumerate_words: more than " + std::to_string(max_count) +
                                    " admissible words at length " + std::to_string(length));
            out.push_back(cur);
            return;
        }
        if (cur.empty()) {
            for (int s = 0; s < system.alphabet_size(); ++s) {
                cur.push_back(static_cast<Symbol>(s));
                rec();
                cur.pop_back();
            }
        } else {
            for (Symbol s : system.successors(cur.back())) {
                cur.push_back(s);
                rec();
                cur.pop_back();
            }
        }
    };
    rec();
    return out;
}

} // namespace trimshift
