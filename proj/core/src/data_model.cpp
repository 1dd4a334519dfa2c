#include "feast/data_model.hpp"

#include "feast/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace feast {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double_field(const std::string& raw, const std::string& ctx) {
    std::string s = trim(raw);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw InputError(ctx + ": expected a number, got '" + raw + "'");
    return v;
}

std::int64_t parse_int_field(const std::string& raw, const std::string& ctx) {
    std::string s = trim(raw);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw InputError(ctx + ": expected an integer, got '" + raw + "'");
    return v;
}

std::string row_ctx(const std::filesystem::path& path, std::size_t row_index) {
    // Header is record 1, so data row i (0-based) is record i + 2.
    return path.filename().string() + " row " + std::to_string(row_index + 2);
}

}  // namespace

std::optional<Eigen::Index> DistanceMatrix::index_of(WineId id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - ids.begin());
}

std::optional<Eigen::Index> Embedding2D::index_of(WineId id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - ids.begin());
}

std::unordered_map<WineId, Eigen::Index> Embedding2D::index_map() const {
    std::unordered_map<WineId, Eigen::Index> m;
    m.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        m.emplace(ids[i], static_cast<Eigen::Index>(i));
    return m;
}

std::vector<StickerAnnotation> parse_napping(const std::filesystem::path& path) {
    CsvTable t = read_csv(path);
    const auto c_round = t.require_column("session_round_name");
    const auto c_event = t.require_column("event_name");
    const auto c_no = t.require_column("experiment_no");
    const auto c_wine = t.require_column("experiment_id");
    const auto c_x = t.require_column("coor1");
    const auto c_y = t.require_column("coor2");
    const auto c_color = t.require_column("color");

    std::vector<StickerAnnotation> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = row_ctx(path, i);
        if (row.size() != t.header.size())
            throw InputError(ctx + ": expected " + std::to_string(t.header.size()) +
                             " fields, got " + std::to_string(row.size()));
        StickerAnnotation a;
        a.session_round_name = row[c_round];
        a.event_name = row[c_event];
        a.experiment_no = parse_int_field(row[c_no], ctx + " experiment_no");
        a.wine = parse_int_field(row[c_wine], ctx + " experiment_id");
        if (a.wine < 0) throw InputError(ctx + ": experiment_id must be nonnegative");
        a.coor1 = parse_double_field(row[c_x], ctx + " coor1");
        a.coor2 = parse_double_field(row[c_y], ctx + " coor2");
        if (!std::isfinite(a.coor1) || !std::isfinite(a.coor2) || a.coor1 < 0 || a.coor2 < 0)
            throw InputError(ctx + ": coordinates must be finite and nonnegative");
        a.color = row[c_color];
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<WineRecord> parse_attributes(const std::filesystem::path& path) {
    CsvTable t = read_csv(path);
    const auto c_vid = t.require_column("vintage_id");
    const auto c_eid = t.column("experiment_id");
    const auto c_year = t.column("year");
    const auto c_country = t.column("country");
    const auto c_region = t.column("region");
    const auto c_price = t.column("price");
    const auto c_rating = t.column("rating");
    const auto c_alcohol = t.column("alcohol");
    const auto c_grape = t.column("grape");
    const auto c_review = t.column("review");
    const auto c_image = t.column("image");

    auto cell = [&](const std::vector<std::string>& row,
                    const std::optional<std::size_t>& col) -> std::string {
        if (!col || *col >= row.size()) return "";
        return row[*col];
    };

    std::vector<WineRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = row_ctx(path, i);
        WineRecord r;
        if (c_vid >= row.size() || trim(row[c_vid]).empty())
            throw InputError(ctx + ": vintage_id is required");
        r.vintage_id = parse_int_field(row[c_vid], ctx + " vintage_id");

        if (std::string s = trim(cell(row, c_eid)); !s.empty())
            r.experiment_id = parse_int_field(s, ctx + " experiment_id");
        if (std::string s = trim(cell(row, c_year)); !s.empty())
            r.year = static_cast<int>(parse_int_field(s, ctx + " year"));
        if (std::string s = cell(row, c_country); !trim(s).empty()) r.country = trim(s);
        if (std::string s = cell(row, c_region); !trim(s).empty()) r.region = trim(s);
        if (std::string s = trim(cell(row, c_price)); !s.empty()) {
            r.price = parse_double_field(s, ctx + " price");
            if (*r.price < 0) throw InputError(ctx + ": price must be nonnegative");
        }
        if (std::string s = trim(cell(row, c_rating)); !s.empty())
            r.rating = parse_double_field(s, ctx + " rating");
        if (std::string s = trim(cell(row, c_alcohol)); !s.empty()) {
            r.alcohol = parse_double_field(s, ctx + " alcohol");
            if (*r.alcohol < 0 || *r.alcohol > 100)
                throw InputError(ctx + ": alcohol must be within [0, 100]");
        }
        if (std::string g = cell(row, c_grape); !trim(g).empty()) {
            std::stringstream ss(g);
            std::string part;
            while (std::getline(ss, part, ',')) {
                part = trim(part);
                if (!part.empty()) r.grapes.push_back(part);
            }
        }
        if (std::string s = cell(row, c_review); !s.empty()) r.review = s;
        if (std::string s = trim(cell(row, c_image)); !s.empty()) r.image_ref = s;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ParticipantRecord> parse_participants(const std::filesystem::path& path) {
    CsvTable t = read_csv(path);
    const auto c_round = t.require_column("session_round_name");
    const auto c_event = t.require_column("event_name");
    const auto c_no = t.require_column("experiment_no");
    const auto c_rid = t.require_column("round_id");
    const auto c_pid = t.require_column("participant_id");

    std::vector<ParticipantRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = row_ctx(path, i);
        ParticipantRecord r;
        r.session_round_name = row[c_round];
        r.event_name = row[c_event];
        r.experiment_no = parse_int_field(row[c_no], ctx + " experiment_no");
        r.round_id = static_cast<int>(parse_int_field(row[c_rid], ctx + " round_id"));
        r.participant_id = parse_int_field(row[c_pid], ctx + " participant_id");
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

EmbeddingRows load_rows_impl(const std::filesystem::path& path, bool reject_duplicates) {
    CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "id")
        throw InputError(path.string() + ": first column must be 'id'");
    const std::size_t dims = t.header.size() - 1;
    if (dims < 1) throw InputError(path.string() + ": no embedding columns");
    for (std::size_t j = 0; j < dims; ++j) {
        if (t.header[j + 1] != "e" + std::to_string(j))
            throw InputError(path.string() + ": embedding columns must be named e0..e" +
                             std::to_string(dims - 1));
    }

    EmbeddingRows rows;
    rows.ids.reserve(t.rows.size());
    rows.vectors.resize(static_cast<Eigen::Index>(t.rows.size()),
                        static_cast<Eigen::Index>(dims));
    std::unordered_set<WineId> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = row_ctx(path, i);
        if (row.size() != t.header.size())
            throw InputError(ctx + ": ragged row, expected " +
                             std::to_string(t.header.size()) + " fields");
        WineId id = parse_int_field(row[0], ctx + " id");
        if (reject_duplicates && !seen.insert(id).second)
            throw InputError(ctx + ": duplicate id " + std::to_string(id));
        rows.ids.push_back(id);
        for (std::size_t j = 0; j < dims; ++j) {
            double v = parse_double_field(row[j + 1], ctx + " e" + std::to_string(j));
            if (!std::isfinite(v))
                throw InputError(ctx + ": non-finite value in e" + std::to_string(j));
            rows.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return rows;
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    EmbeddingRows rows = load_rows_impl(path, true);
    return EmbeddingTable{std::move(rows.ids), std::move(rows.vectors)};
}

EmbeddingRows load_embedding_rows(const std::filesystem::path& path) {
    return load_rows_impl(path, false);
}

DistanceBuildResult build_distance_matrix(std::span<const StickerAnnotation> annotations,
                                          const DistanceOptions& options) {
    using SheetKey = std::tuple<std::string, std::string, std::int64_t>;
    std::map<SheetKey, std::vector<const StickerAnnotation*>> sheets;
    for (const auto& a : annotations)
        sheets[{a.event_name, a.session_round_name, a.experiment_no}].push_back(&a);

    DistanceBuildResult result;
    std::map<std::pair<WineId, WineId>, std::vector<double>> pair_samples;
    std::set<WineId> wines;

    for (const auto& [key, stickers] : sheets) {
        if (stickers.size() < 2) {
            ++result.skipped_sheets;
            continue;
        }
        std::unordered_set<WineId> on_sheet;
        for (const auto* s : stickers) {
            if (!on_sheet.insert(s->wine).second)
                throw InputError("wine " + std::to_string(s->wine) +
                                 " appears twice on sheet (" + std::get<0>(key) + ", " +
                                 std::get<1>(key) + ", " + std::to_string(std::get<2>(key)) + ")");
        }

        double scale = 1.0;
        if (options.normalize) {
            double min_x = stickers[0]->coor1, max_x = min_x;
            double min_y = stickers[0]->coor2, max_y = min_y;
            for (const auto* s : stickers) {
                min_x = std::min(min_x, s->coor1);
                max_x = std::max(max_x, s->coor1);
                min_y = std::min(min_y, s->coor2);
                max_y = std::max(max_y, s->coor2);
            }
            double diag = std::hypot(max_x - min_x, max_y - min_y);
            if (diag > 0) scale = 1.0 / diag;
        }

        for (std::size_t i = 0; i < stickers.size(); ++i) {
            wines.insert(stickers[i]->wine);
            for (std::size_t j = i + 1; j < stickers.size(); ++j) {
                double dist = scale * std::hypot(stickers[i]->coor1 - stickers[j]->coor1,
                                                 stickers[i]->coor2 - stickers[j]->coor2);
                WineId a = std::min(stickers[i]->wine, stickers[j]->wine);
                WineId b = std::max(stickers[i]->wine, stickers[j]->wine);
                pair_samples[{a, b}].push_back(dist);
            }
        }
    }

    DistanceMatrix& m = result.matrix;
    m.ids.assign(wines.begin(), wines.end());
    const auto n = static_cast<Eigen::Index>(m.ids.size());
    m.d = Eigen::MatrixXd::Zero(n, n);

    std::unordered_map<WineId, Eigen::Index> index;
    for (Eigen::Index i = 0; i < n; ++i) index[m.ids[static_cast<std::size_t>(i)]] = i;

    for (auto& [pair, samples] : pair_samples) {
        double value = 0.0;
        if (options.aggregate == PairAggregate::Mean) {
            for (double s : samples) value += s;
            value /= static_cast<double>(samples.size());
        } else {
            std::sort(samples.begin(), samples.end());
            std::size_t mid = samples.size() / 2;
            value = (samples.size() % 2 == 1) ? samples[mid]
                                              : 0.5 * (samples[mid - 1] + samples[mid]);
        }
        Eigen::Index i = index[pair.first], j = index[pair.second];
        m.d(i, j) = value;
        m.d(j, i) = value;
    }
    return result;
}

void validate_distance_matrix(const DistanceMatrix& m) {
    const auto n = m.size();
    if (m.d.rows() != n || m.d.cols() != n)
        throw InputError("distance matrix shape does not match id list");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (m.d(i, i) != 0.0) throw InputError("distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (!(m.d(i, j) >= 0.0) || !std::isfinite(m.d(i, j)))
                throw InputError("distance matrix entries must be finite and nonnegative");
            if (m.d(i, j) != m.d(j, i))
                throw InputError("distance matrix must be symmetric");
        }
    }
}

std::vector<FlavorTriplet> triplets_from_matrix(const DistanceMatrix& m) {
    validate_distance_matrix(m);
    const auto n = m.size();
    std::vector<FlavorTriplet> out;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || m.d(i, j) == 0.0) continue;
            for (Eigen::Index k = j + 1; k < n; ++k) {
                if (k == i || m.d(i, k) == 0.0) continue;
                double dij = m.d(i, j), dik = m.d(i, k);
                if (dij == dik) continue;
                const auto& ids = m.ids;
                if (dij < dik)
                    out.push_back({ids[static_cast<std::size_t>(i)],
                                   ids[static_cast<std::size_t>(j)],
                                   ids[static_cast<std::size_t>(k)]});
                else
                    out.push_back({ids[static_cast<std::size_t>(i)],
                                   ids[static_cast<std::size_t>(k)],
                                   ids[static_cast<std::size_t>(j)]});
            }
        }
    }
    return out;
}

TripletSplit split_triplets_by_wine(std::span<const FlavorTriplet> triplets,
                                    double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must lie in (0, 1)");
    if (triplets.empty()) throw InputError("cannot split an empty triplet list");

    std::set<WineId> universe;
    for (const auto& t : triplets) {
        universe.insert(t.anchor);
        universe.insert(t.near);
        universe.insert(t.far);
    }
    std::vector<WineId> order(universe.begin(), universe.end());

    // Fisher-Yates with an explicit draw so the permutation is stable
    // across standard-library implementations.
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(order.size())));

    TripletSplit split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_test) split.test_wines.insert(order[i]);
        else split.train_wines.insert(order[i]);
    }
    for (const auto& t : triplets) {
        auto in = [&](const std::set<WineId>& s) {
            return s.count(t.anchor) && s.count(t.near) && s.count(t.far);
        };
        if (in(split.test_wines)) split.test.push_back(t);
        else if (in(split.train_wines)) split.train.push_back(t);
        else ++split.discarded;
    }
    return split;
}

std::string napping_to_csv(std::span<const StickerAnnotation> annotations) {
    std::string out = "session_round_name,event_name,experiment_no,experiment_id,coor1,coor2,color\n";
    for (const auto& a : annotations) {
        out += csv_escape(a.session_round_name) + ',' + csv_escape(a.event_name) + ',';
        out += std::to_string(a.experiment_no) + ',' + std::to_string(a.wine) + ',';
        out += format_double(a.coor1) + ',' + format_double(a.coor2) + ',';
        out += csv_escape(a.color) + '\n';
    }
    return out;
}

void write_napping_csv(std::span<const StickerAnnotation> annotations,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << napping_to_csv(annotations);
}

std::string embedding2d_to_csv(const Embedding2D& e) {
    std::string out = "id,x,y\n";
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        out += std::to_string(e.ids[static_cast<std::size_t>(i)]) + ',';
        out += format_double(e.points(i, 0)) + ',' + format_double(e.points(i, 1)) + '\n';
    }
    return out;
}

void write_embedding2d_csv(const Embedding2D& e, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << embedding2d_to_csv(e);
}

Embedding2D read_embedding2d_csv(const std::filesystem::path& path) {
    CsvTable t = read_csv(path);
    const auto c_id = t.require_column("id");
    const auto c_x = t.require_column("x");
    const auto c_y = t.require_column("y");

    Embedding2D e;
    e.ids.reserve(t.rows.size());
    e.points.resize(static_cast<Eigen::Index>(t.rows.size()), 2);
    std::unordered_set<WineId> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string ctx = row_ctx(path, i);
        WineId id = parse_int_field(t.rows[i][c_id], ctx + " id");
        if (!seen.insert(id).second)
            throw InputError(ctx + ": duplicate id " + std::to_string(id));
        double x = parse_double_field(t.rows[i][c_x], ctx + " x");
        double y = parse_double_field(t.rows[i][c_y], ctx + " y");
        if (!std::isfinite(x) || !std::isfinite(y))
            throw InputError(ctx + ": non-finite coordinate");
        e.ids.push_back(id);
        e.points(static_cast<Eigen::Index>(i), 0) = x;
        e.points(static_cast<Eigen::Index>(i), 1) = y;
    }
    return e;
}

}  // namespace feast
