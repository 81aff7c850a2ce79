#pragma once

#include "eventcast/date.hpp"
#include "eventcast/error.hpp"
#include "eventcast/io.hpp"
#include "eventcast/text.hpp"

#include <charconv>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace eventcast {

/// One region's daily series over a contiguous date range.
struct RegionSeries {
    std::string country;
    std::string region;
    Date start;
    std::vector<double> target;
    std::vector<std::vector<double>> features; // [k][n]
    std::vector<bool> event_mask;
    std::vector<double> baseline;

    std::size_t size() const { return target.size(); }
    Date date(std::size_t i) const { return start + static_cast<long>(i); }

    bool operator==(const RegionSeries&) const = default;
};

struct Dataset {
    std::size_t n_features = 0; // auxiliary features per row
    std::vector<RegionSeries> regions;

    bool operator==(const Dataset&) const = default;

    std::size_t n_vars() const { return n_features + 1; }
};

inline std::string dataset_header(std::size_t k) {
    std::string h = "date,country,region,target";
    for (std::size_t i = 1; i <= k; ++i) h += ",feat_" + std::to_string(i);
    return h + ",event_mask,baseline";
}

inline std::string to_csv(const Dataset& ds) {
    std::string out = dataset_header(ds.n_features) + "\n";
    for (const auto& r : ds.regions) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            out += r.date(i).str() + "," + r.country + "," + r.region + "," + text::format_double(r.target[i]);
            for (std::size_t f = 0; f < ds.n_features; ++f) out += "," + text::format_double(r.features[f][i]);
            out += r.event_mask[i] ? ",1," : ",0,";
            out += text::format_double(r.baseline[i]) + "\n";
        }
    }
    return out;
}

namespace detail {

inline double parse_number(std::string_view s, const std::string& file, std::size_t line) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw MalformedRecord(file, line, "not a number: '" + std::string(s) + "'");
    return v;
}

} // namespace detail

/// Rows for one (country, region) must be contiguous and consecutive in date.
inline Dataset parse_csv(std::string_view content, const std::string& file = "dataset.csv") {
    Dataset ds;
    std::size_t lineno = 0, start = 0;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    while (start < content.size()) {
        auto nl = content.find('\n', start);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        start = nl + 1;
        ++lineno;
        if (lineno == 1) {
            auto cols = text::split(line, ',');
            if (cols.size() < 6) throw MalformedRecord(file, 1, "header has too few columns");
            ds.n_features = cols.size() - 6;
            if (std::string(line) != dataset_header(ds.n_features))
                throw MalformedRecord(file, 1, "unexpected header '" + std::string(line) + "'");
            continue;
        }
        if (line.empty()) continue;
        auto cols = text::split(line, ',');
        if (cols.size() != ds.n_features + 6)
            throw MalformedRecord(file, lineno, "expected " + std::to_string(ds.n_features + 6) + " columns");
        Date d;
        try {
            d = Date::parse(cols[0]);
        } catch (const DataError& e) {
            throw MalformedRecord(file, lineno, e.what());
        }
        auto key = std::make_pair(cols[1], cols[2]);
        RegionSeries* r;
        if (ds.regions.empty() || ds.regions.back().country != cols[1] || ds.regions.back().region != cols[2]) {
            if (seen.count(key)) throw MalformedRecord(file, lineno, "rows for region " + cols[2] + " are not contiguous");
            seen[key] = ds.regions.size();
            ds.regions.push_back({});
            r = &ds.regions.back();
            r->country = cols[1];
            r->region = cols[2];
            r->start = d;
            r->features.assign(ds.n_features, {});
        } else {
            r = &ds.regions.back();
            if (d != r->date(r->size())) throw MalformedRecord(file, lineno, "dates are not consecutive");
        }
        r->target.push_back(detail::parse_number(cols[3], file, lineno));
        for (std::size_t f = 0; f < ds.n_features; ++f)
            r->features[f].push_back(detail::parse_number(cols[4 + f], file, lineno));
        const auto& m = cols[4 + ds.n_features];
        if (m != "0" && m != "1") throw MalformedRecord(file, lineno, "event_mask must be 0 or 1");
        r->event_mask.push_back(m == "1");
        r->baseline.push_back(detail::parse_number(cols[5 + ds.n_features], file, lineno));
    }
    if (lineno == 0) throw MalformedRecord(file, 1, "empty dataset");
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& p) { io::write_file_atomic(p, to_csv(ds)); }

inline Dataset load_dataset(const std::filesystem::path& p) {
    return parse_csv(io::read_file(p), p.filename().string());
}

} // namespace eventcast
