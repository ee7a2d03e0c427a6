#pragma once

// Regular LDPC code built by seeded progressive edge placement (no 4-cycles),
// systematic encoding from a GF(2) reduced parity-check matrix, and
// normalized min-sum decoding with a flooding schedule.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aesc/error.hpp"
#include "aesc/rng.hpp"

namespace aesc::phy {

using Bits = std::vector<std::uint8_t>; // one 0/1 value per element

struct LdpcParams {
    std::size_t n = 1024;
    std::size_t k = 512;
    std::size_t column_weight = 3;
    std::uint64_t seed = 0x1DC0DE;
    std::size_t max_iterations = 25;
    double normalization = 0.8;
};

struct LdpcDecodeResult {
    Bits info;
    Bits codeword;
    bool success = false;
    std::size_t iterations = 0;
};

namespace detail {

using Row = std::vector<std::uint64_t>;

inline bool test_bit(const Row& r, std::size_t i) { return (r[i >> 6] >> (i & 63)) & 1u; }
inline void flip_bit(Row& r, std::size_t i) { r[i >> 6] ^= std::uint64_t{1} << (i & 63); }

} // namespace detail

class LdpcCode {
public:
    explicit LdpcCode(const LdpcParams& p = {}) : p_(p) {
        const std::size_t m = p.n - p.k;
        if (p.k == 0 || p.k >= p.n || (p.n * p.column_weight) % m != 0)
            throw UsageError("LDPC parameters do not admit a regular code");
        for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
            if (build_graph(derive_seed(p.seed, {attempt})) && build_encoder()) return;
        }
        throw Error("LDPC construction failed for every seed attempt");
    }

    std::size_t n() const noexcept { return p_.n; }
    std::size_t k() const noexcept { return p_.k; }
    std::size_t m() const noexcept { return p_.n - p_.k; }
    double rate() const noexcept { return double(p_.k) / double(p_.n); }
    const LdpcParams& params() const noexcept { return p_; }

    // Variable indices of each check (row of H).
    const std::vector<std::vector<std::uint32_t>>& check_rows() const noexcept { return checks_; }
    const std::vector<std::size_t>& info_positions() const noexcept { return info_pos_; }

    std::size_t rank() const noexcept { return rank_; }

    Bits encode(std::span<const std::uint8_t> info) const {
        if (info.size() != p_.k) throw UsageError("LDPC encode expects " + std::to_string(p_.k) + " info bits");
        detail::Row u((p_.k + 63) / 64, 0);
        for (std::size_t i = 0; i < p_.k; ++i)
            if (info[i] & 1u) detail::flip_bit(u, i);
        Bits c(p_.n, 0);
        for (std::size_t i = 0; i < p_.k; ++i) c[info_pos_[i]] = info[i] & 1u;
        for (std::size_t r = 0; r < parity_pos_.size(); ++r) {
            unsigned acc = 0;
            for (std::size_t w = 0; w < u.size(); ++w) acc += static_cast<unsigned>(std::popcount(parity_rows_[r][w] & u[w]));
            c[parity_pos_[r]] = static_cast<std::uint8_t>(acc & 1u);
        }
        return c;
    }

    bool syndrome_ok(std::span<const std::uint8_t> c) const {
        for (const auto& row : checks_) {
            unsigned acc = 0;
            for (auto v : row) acc ^= c[v];
            if (acc) return false;
        }
        return true;
    }

    Bits extract_info(std::span<const std::uint8_t> c) const {
        Bits u(p_.k);
        for (std::size_t i = 0; i < p_.k; ++i) u[i] = c[info_pos_[i]];
        return u;
    }

    // LLR convention: positive favours bit 0.
    LdpcDecodeResult decode(std::span<const double> llr) const {
        if (llr.size() != p_.n) throw UsageError("LDPC decode expects " + std::to_string(p_.n) + " LLRs");
        LdpcDecodeResult res;
        res.codeword.assign(p_.n, 0);
        std::vector<double> total(llr.begin(), llr.end());
        auto harden = [&] {
            for (std::size_t v = 0; v < p_.n; ++v) res.codeword[v] = total[v] < 0.0 ? 1 : 0;
        };
        harden();
        if (syndrome_ok(res.codeword)) {
            res.success = true;
            res.info = extract_info(res.codeword);
            return res;
        }
        std::vector<double> c2v(edges_, 0.0);
        std::vector<double> v2c(edges_);
        for (std::size_t it = 1; it <= p_.max_iterations; ++it) {
            std::size_t e = 0;
            for (const auto& row : checks_) {
                double min1 = INFINITY, min2 = INFINITY;
                std::size_t arg = 0;
                bool negative = false;
                for (std::size_t j = 0; j < row.size(); ++j) {
                    const double m = total[row[j]] - c2v[e + j];
                    v2c[e + j] = m;
                    const double a = std::abs(m);
                    negative ^= m < 0.0;
                    if (a < min1) {
                        min2 = min1;
                        min1 = a;
                        arg = j;
                    } else if (a < min2) {
                        min2 = a;
                    }
                }
                for (std::size_t j = 0; j < row.size(); ++j) {
                    const double mag = p_.normalization * (j == arg ? min2 : min1);
                    const bool neg = negative ^ (v2c[e + j] < 0.0);
                    c2v[e + j] = neg ? -mag : mag;
                }
                e += row.size();
            }
            std::copy(llr.begin(), llr.end(), total.begin());
            e = 0;
            for (const auto& row : checks_) {
                for (auto v : row) total[v] += c2v[e++];
            }
            harden();
            res.iterations = it;
            if (syndrome_ok(res.codeword)) {
                res.success = true;
                break;
            }
        }
        res.info = extract_info(res.codeword);
        return res;
    }

private:
    bool build_graph(std::uint64_t seed) {
        const std::size_t m = this->m();
        const std::size_t row_weight = p_.n * p_.column_weight / m;
        Rng rng(seed);
        checks_.assign(m, {});
        std::vector<std::vector<std::uint32_t>> var_checks(p_.n);
        // mark[c] == stamp: check c already reaches a neighbour of v (placing it would close a 4-cycle).
        std::vector<std::size_t> mark(m, 0);
        std::size_t stamp = 0;
        std::vector<std::uint32_t> order(p_.n);
        for (std::uint32_t v = 0; v < p_.n; ++v) order[v] = v;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::uint32_t> candidates;
        for (auto v : order) {
            for (std::size_t d = 0; d < p_.column_weight; ++d) {
                ++stamp;
                for (auto c : var_checks[v])
                    for (auto u : checks_[c])
                        for (auto c2 : var_checks[u]) mark[c2] = stamp;
                candidates.clear();
                std::size_t best = row_weight;
                for (std::uint32_t c = 0; c < m; ++c) {
                    if (checks_[c].size() >= row_weight || mark[c] == stamp) continue;
                    if (std::find(var_checks[v].begin(), var_checks[v].end(), c) != var_checks[v].end()) continue;
                    if (checks_[c].size() < best) {
                        best = checks_[c].size();
                        candidates.clear();
                    }
                    if (checks_[c].size() == best) candidates.push_back(c);
                }
                if (candidates.empty()) return false;
                const auto c = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
                checks_[c].push_back(v);
                var_checks[v].push_back(c);
            }
        }
        for (auto& row : checks_) std::sort(row.begin(), row.end());
        edges_ = p_.n * p_.column_weight;
        return true;
    }

    // Reduces H over GF(2); pivot columns carry parity, the rest carry info.
    bool build_encoder() {
        const std::size_t m = this->m(), words = (p_.n + 63) / 64;
        std::vector<detail::Row> h(m, detail::Row(words, 0));
        for (std::size_t r = 0; r < m; ++r)
            for (auto v : checks_[r]) detail::flip_bit(h[r], v);
        std::vector<std::size_t> pivots;
        std::size_t row = 0;
        // Scan columns from the end so parity bits sit mostly at the tail.
        for (std::size_t col = p_.n; col-- > 0 && row < m;) {
            std::size_t sel = row;
            while (sel < m && !detail::test_bit(h[sel], col)) ++sel;
            if (sel == m) continue;
            std::swap(h[row], h[sel]);
            for (std::size_t r = 0; r < m; ++r)
                if (r != row && detail::test_bit(h[r], col))
                    for (std::size_t w = 0; w < words; ++w) h[r][w] ^= h[row][w];
            pivots.push_back(col);
            ++row;
        }
        rank_ = row;
        if (rank_ != m) return false;
        std::vector<bool> is_pivot(p_.n, false);
        for (auto c : pivots) is_pivot[c] = true;
        info_pos_.clear();
        for (std::size_t c = 0; c < p_.n; ++c)
            if (!is_pivot[c]) info_pos_.push_back(c);
        parity_pos_ = pivots;
        parity_rows_.assign(m, detail::Row((p_.k + 63) / 64, 0));
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t i = 0; i < p_.k; ++i)
                if (detail::test_bit(h[r], info_pos_[i])) detail::flip_bit(parity_rows_[r], i);
        return true;
    }

    LdpcParams p_;
    std::vector<std::vector<std::uint32_t>> checks_;
    std::size_t edges_ = 0;
    std::size_t rank_ = 0;
    std::vector<std::size_t> info_pos_;
    std::vector<std::size_t> parity_pos_;
    std::vector<detail::Row> parity_rows_;
};

// The (1024, 512) code shared by every link.
inline const LdpcCode& default_ldpc() {
    static const LdpcCode code{};
    return code;
}

} // namespace aesc::phy
