#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "linimed/als.hpp"
#include "linimed/envs.hpp"
#include "linimed/errors.hpp"

namespace linimed {

struct Rating {
    std::int64_t user = 0;
    std::int64_t movie = 0;
    double rating = 0.0;
};

inline constexpr double kClickThreshold = 3.0;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\xEF' || s.front() == '\xBB' ||
                          s.front() == '\xBF'))
        s.remove_prefix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, std::string_view delim) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(delim, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + delim.size();
    }
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    s = trim(s);
    if (s.empty()) return false;
    if constexpr (std::is_floating_point_v<T>) {
        // std::from_chars for double is not in every libstdc++ we build on.
        std::string tmp(s);
        char* end = nullptr;
        out = std::strtod(tmp.c_str(), &end);
        return end == tmp.c_str() + tmp.size() && std::isfinite(out);
    } else {
        const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        return res.ec == std::errc() && res.ptr == s.data() + s.size();
    }
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Parses MovieLens ratings. Accepts `UserID::MovieID::Rating::Timestamp`
/// lines (10M layout) or CSV with a `userId,movieId,rating,timestamp` header,
/// chosen by the first line.
inline std::vector<Rating> parse_ratings(std::istream& in) {
    std::vector<Rating> out;
    std::string line;
    std::size_t lineno = 0;
    bool csv = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = detail::trim(line);
        if (lineno == 1 && view.rfind("userId", 0) == 0) {
            if (view != "userId,movieId,rating,timestamp")
                throw IngestionError("line 1: unexpected CSV header '" + std::string(view) + "'");
            csv = true;
            continue;
        }
        if (view.empty()) continue;
        const auto fields = detail::split(view, csv ? "," : "::");
        auto fail = [&](const std::string& why) {
            return IngestionError("line " + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() != 4) throw fail("expected 4 fields, got " + std::to_string(fields.size()));
        Rating r;
        std::int64_t ts = 0;
        if (!detail::parse_number(fields[0], r.user)) throw fail("bad user id");
        if (!detail::parse_number(fields[1], r.movie)) throw fail("bad movie id");
        if (!detail::parse_number(fields[2], r.rating)) throw fail("bad rating");
        if (!detail::parse_number(fields[3], ts)) throw fail("bad timestamp");
        if (r.rating < 0.0 || r.rating > 5.0) throw fail("rating out of range [0, 5]");
        out.push_back(r);
    }
    return out;
}

struct MovieLensOptions {
    std::size_t rank = 5;  // context dimension is rank^2
    std::size_t K = 20;
    std::size_t min_ratings = 1;  // counted over the K selected movies
    std::uint64_t seed = 0;
    double bound_L = std::sqrt(20.0);
    std::size_t als_iterations = 25;
    double als_reg = 0.1;
    bool use_cache = true;
    std::filesystem::path cache_path;  // empty: "<ratings>.factors"
};

/// Key identifying a factor model in the sidecar cache.
struct FactorCacheKey {
    std::uint64_t file_hash = 0;
    std::uint64_t rank = 0;
    std::uint64_t K = 0;
    std::uint64_t min_ratings = 0;
    std::uint64_t seed = 0;
    bool operator==(const FactorCacheKey&) const = default;
};

struct CachedFactors {
    FactorCacheKey key;
    FactorModel model;
    double scale = 1.0;
};

namespace detail {
inline constexpr char kCacheMagic[8] = {'L', 'M', 'F', 'C', 'A', 'C', 'H', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
bool get(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}
inline void put_matrix(std::ostream& out, const Matrix& m) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
}
inline bool get_matrix(std::istream& in, Matrix& m) {
    std::uint64_t rows = 0, cols = 0;
    if (!get(in, rows) || !get(in, cols)) return false;
    if (rows > (1ULL << 32) || cols > (1ULL << 16)) return false;
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (!get(in, m(i, j))) return false;
    return true;
}
}  // namespace detail

// Little-endian host layout; doubles are stored as raw IEEE-754 bytes.
inline void write_factor_cache(const std::filesystem::path& path, const CachedFactors& c) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write factor cache " + path.string());
    out.write(detail::kCacheMagic, sizeof(detail::kCacheMagic));
    detail::put(out, c.key.file_hash);
    detail::put(out, c.key.rank);
    detail::put(out, c.key.K);
    detail::put(out, c.key.min_ratings);
    detail::put(out, c.key.seed);
    detail::put(out, c.scale);
    detail::put_matrix(out, c.model.users);
    detail::put_matrix(out, c.model.items);
    if (!out) throw IoError("short write to factor cache " + path.string());
}

// Returns nullopt when the file is missing, truncated or from another format.
inline std::optional<CachedFactors> read_factor_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof(detail::kCacheMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kCacheMagic, sizeof(magic)) != 0)
        return std::nullopt;
    CachedFactors c;
    if (!detail::get(in, c.key.file_hash) || !detail::get(in, c.key.rank) || !detail::get(in, c.key.K) ||
        !detail::get(in, c.key.min_ratings) || !detail::get(in, c.key.seed) || !detail::get(in, c.scale))
        return std::nullopt;
    if (!detail::get_matrix(in, c.model.users) || !detail::get_matrix(in, c.model.items)) return std::nullopt;
    return c;
}

/// Offline replay over the K most-rated movies. Each round one eligible user
/// (uniformly, with replacement) is shown K contexts vec(u_i m_j^T) * scale;
/// the reward is 1 iff that user rated the movie at least 3, missing = 0.
class MovieLensEnvironment final : public Environment {
public:
    EnvKind kind() const override { return EnvKind::MovieLensReplay; }
    std::size_t dim() const override { return rank_ * rank_; }
    std::size_t num_arms() const override { return movies_.size(); }
    double bound_L() const override { return bound_L_; }

    std::size_t num_users() const { return users_.size(); }
    std::size_t rank() const { return rank_; }
    const std::vector<std::int64_t>& movie_ids() const { return movies_; }
    const std::vector<std::int64_t>& user_ids() const { return users_; }
    const FactorModel& factors() const { return factors_; }
    double scale() const { return scale_; }
    bool loaded_from_cache() const { return from_cache_; }
    std::uint64_t file_hash() const { return file_hash_; }

    // -1 missing, 0 rated below 3, 1 click. Indexed by (user row, movie column).
    int click_state(std::size_t user, std::size_t movie) const { return clicks_[user * movies_.size() + movie]; }
    double click(std::size_t user, std::size_t movie) const { return click_state(user, movie) == 1 ? 1.0 : 0.0; }

    // Mean click over all (eligible user, selected movie) pairs: the
    // long-run CTR of a uniformly random recommender.
    double uniform_ctr() const {
        double total = 0.0;
        for (std::size_t u = 0; u < users_.size(); ++u)
            for (std::size_t m = 0; m < movies_.size(); ++m) total += click(u, m);
        return total / static_cast<double>(users_.size() * movies_.size());
    }

    Vector context(std::size_t user, std::size_t movie) const {
        const auto r = static_cast<Eigen::Index>(rank_);
        Vector x(r * r);
        for (Eigen::Index a = 0; a < r; ++a)
            for (Eigen::Index b = 0; b < r; ++b)
                x[a * r + b] = scale_ * factors_.users(static_cast<Eigen::Index>(user), a) *
                               factors_.items(static_cast<Eigen::Index>(movie), b);
        return x;
    }

    std::size_t sample_user(Rng& rng) const {
        std::uniform_int_distribution<std::size_t> pick(0, users_.size() - 1);
        return pick(rng);
    }

    Round round_for_user(std::size_t t, std::size_t user) const {
        Round r;
        r.user = user;
        r.arms.round = t;
        r.arms.arms.reserve(movies_.size());
        r.expected.reserve(movies_.size());
        for (std::size_t m = 0; m < movies_.size(); ++m) {
            r.arms.arms.push_back({static_cast<int>(m), context(user, m)});
            r.expected.push_back(click(user, m));
        }
        r.best = detail::best_position(r.expected);
        return r;
    }

    Round next_round(std::size_t t, Rng& rng) const override { return round_for_user(t, sample_user(rng)); }

    double draw_reward(const Round& round, std::size_t pos, Rng&) const override { return round.expected[pos]; }

    /// Builds the replay from parsed ratings. `file_hash` keys the cache.
    static MovieLensEnvironment build(const std::vector<Rating>& ratings, const MovieLensOptions& opt,
                                      std::uint64_t file_hash, const std::filesystem::path& cache_path) {
        if (opt.K == 0) throw ConfigError("movielens: K must be >= 1");
        if (opt.rank == 0) throw ConfigError("movielens: rank must be >= 1");

        std::unordered_map<std::int64_t, std::size_t> counts;
        for (const auto& r : ratings) ++counts[r.movie];
        if (opt.K > counts.size())
            throw ConfigError("movielens: K = " + std::to_string(opt.K) + " exceeds the " +
                              std::to_string(counts.size()) + " movies in the file");
        std::vector<std::pair<std::int64_t, std::size_t>> by_count(counts.begin(), counts.end());
        std::sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });

        MovieLensEnvironment env;
        env.rank_ = opt.rank;
        env.bound_L_ = opt.bound_L;
        env.file_hash_ = file_hash;
        std::unordered_map<std::int64_t, std::size_t> movie_col;
        for (std::size_t j = 0; j < opt.K; ++j) {
            env.movies_.push_back(by_count[j].first);
            movie_col[by_count[j].first] = j;
        }

        // Last rating wins if a (user, movie) pair repeats.
        std::map<std::int64_t, std::vector<std::pair<std::size_t, double>>> per_user;
        for (const auto& r : ratings) {
            const auto it = movie_col.find(r.movie);
            if (it != movie_col.end()) per_user[r.user].push_back({it->second, r.rating});
        }
        for (const auto& [user, rated] : per_user) {
            std::vector<bool> seen(opt.K, false);
            std::size_t distinct = 0;
            for (const auto& [col, rating] : rated) distinct += seen[col] ? 0 : (seen[col] = true, 1);
            if (distinct < std::max<std::size_t>(opt.min_ratings, 1)) continue;
            const std::size_t row = env.users_.size();
            env.users_.push_back(user);
            env.clicks_.resize((row + 1) * opt.K, -1);
            for (const auto& [col, rating] : rated)
                env.clicks_[row * opt.K + col] = rating >= kClickThreshold ? 1 : 0;
        }
        if (env.users_.empty()) throw ConfigError("movielens: no user meets min_ratings");

        const FactorCacheKey key{file_hash, opt.rank, opt.K, opt.min_ratings, opt.seed};
        if (opt.use_cache) {
            if (auto cached = read_factor_cache(cache_path); cached && cached->key == key &&
                                                             cached->model.users.rows() ==
                                                                 static_cast<Eigen::Index>(env.users_.size())) {
                env.factors_ = std::move(cached->model);
                env.scale_ = cached->scale;
                env.from_cache_ = true;
                return env;
            }
        }

        Matrix target(static_cast<Eigen::Index>(env.users_.size()), static_cast<Eigen::Index>(opt.K));
        for (std::size_t u = 0; u < env.users_.size(); ++u)
            for (std::size_t m = 0; m < opt.K; ++m)
                target(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(m)) = env.click(u, m);
        std::mt19937_64 rng(opt.seed);
        env.factors_ = als_factorize(target, opt.rank, opt.als_reg, opt.als_iterations, rng);

        // ||vec(u m^T)|| = ||u|| ||m||, so one global scale bounds every context.
        const double max_user = env.factors_.users.rowwise().norm().maxCoeff();
        const double max_item = env.factors_.items.rowwise().norm().maxCoeff();
        const double largest = max_user * max_item;
        env.scale_ = largest > 0.0 ? opt.bound_L / largest : 1.0;

        if (opt.use_cache) write_factor_cache(cache_path, CachedFactors{key, env.factors_, env.scale_});
        return env;
    }

private:
    std::size_t rank_ = 5;
    double bound_L_ = std::sqrt(20.0);
    double scale_ = 1.0;
    bool from_cache_ = false;
    std::uint64_t file_hash_ = 0;
    std::vector<std::int64_t> movies_;
    std::vector<std::int64_t> users_;
    std::vector<signed char> clicks_;
    FactorModel factors_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open ratings file " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline MovieLensEnvironment movielens_load(const std::filesystem::path& ratings_path, const MovieLensOptions& opt) {
    const std::string bytes = read_file(ratings_path);
    std::istringstream in(bytes);
    const auto ratings = parse_ratings(in);
    std::filesystem::path cache = opt.cache_path;
    if (cache.empty()) cache = ratings_path.string() + ".factors";
    return MovieLensEnvironment::build(ratings, opt, detail::fnv1a(bytes), cache);
}

inline Round movielens_round(const MovieLensEnvironment& env, std::size_t t, Rng& rng) {
    return env.next_round(t, rng);
}

/// Writes a ratings.dat-style file from a low-rank taste model: user and
/// movie tastes in R^3, a Zipf-like popularity deciding who rates what, and
/// ratings rounded to half stars in [0.5, 5].
inline void generate_synthetic_ratings(std::ostream& out, std::size_t users, std::size_t movies,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int kTaste = 3;
    auto taste = [&] {
        std::array<double, kTaste> v{};
        for (auto& c : v) c = normal(rng) / std::sqrt(static_cast<double>(kTaste));
        return v;
    };
    std::vector<std::array<double, kTaste>> movie_taste(movies);
    std::vector<double> popularity(movies), bias(movies);
    for (std::size_t j = 0; j < movies; ++j) {
        movie_taste[j] = taste();
        popularity[j] = 0.9 / std::pow(1.0 + static_cast<double>(j) / 15.0, 0.8);
        bias[j] = 0.3 * normal(rng);
    }
    std::int64_t timestamp = 1'100'000'000;
    for (std::size_t i = 0; i < users; ++i) {
        const auto u = taste();
        const double activity = 0.4 + 0.6 * unit(rng);
        for (std::size_t j = 0; j < movies; ++j) {
            if (unit(rng) > popularity[j] * activity) continue;
            double affinity = 0.0;
            for (int k = 0; k < kTaste; ++k) affinity += u[k] * movie_taste[j][k];
            double rating = 2.9 + bias[j] + 2.0 * affinity + 0.4 * normal(rng);
            rating = std::clamp(std::round(rating * 2.0) / 2.0, 0.5, 5.0);
            timestamp += 1 + static_cast<std::int64_t>(unit(rng) * 100);
            out << (i + 1) << "::" << (j + 1) << "::" << rating << "::" << timestamp << '\n';
        }
    }
}

}  // namespace linimed
