#include "lifetail/design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lifetail/io_util.hpp"

namespace lifetail {

namespace {

bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
    throw std::runtime_error("row " + std::to_string(row) + ": " + what);
}

}  // namespace

bool CovariateSchema::resolved() const {
    for (const auto& c : covariates)
        if (c.reference.empty()) return false;
    return true;
}

void CovariateSchema::validate() const {
    for (const auto& cov : covariates) {
        if (!valid_label(cov.name))
            throw std::invalid_argument("schema: invalid covariate name '" + cov.name + "'");
        if (cov.categories.empty())
            throw std::invalid_argument("schema: covariate '" + cov.name + "' has no categories");
        for (const auto& cat : cov.categories) {
            if (!valid_label(cat))
                throw std::invalid_argument("schema: invalid category '" + cat +
                                            "' in covariate '" + cov.name + "'");
            if (std::count(cov.categories.begin(), cov.categories.end(), cat) != 1)
                throw std::invalid_argument("schema: duplicate category '" + cat +
                                            "' in covariate '" + cov.name + "'");
        }
        if (!cov.reference.empty() &&
            std::find(cov.categories.begin(), cov.categories.end(), cov.reference) ==
                cov.categories.end())
            throw std::invalid_argument("schema: reference '" + cov.reference +
                                        "' not a category of '" + cov.name + "'");
    }
    for (const auto& cov : covariates) {
        auto count = std::count_if(covariates.begin(), covariates.end(),
                                   [&](const Covariate& c) { return c.name == cov.name; });
        if (count != 1)
            throw std::invalid_argument("schema: duplicate covariate '" + cov.name + "'");
    }
}

std::size_t CovariateSchema::design_dim() const {
    std::size_t d = 1;
    for (const auto& c : covariates) d += c.categories.size() - 1;
    return d;
}

std::vector<std::string> CovariateSchema::column_names() const {
    std::vector<std::string> names;
    names.reserve(design_dim());
    names.push_back("(intercept)");
    for (const auto& cov : covariates)
        for (const auto& cat : cov.categories)
            if (cat != cov.reference) names.push_back(cov.name + "=" + cat);
    return names;
}

const Covariate* CovariateSchema::find(const std::string& name) const {
    for (const auto& c : covariates)
        if (c.name == name) return &c;
    return nullptr;
}

CovariateSchema parse_schema(std::istream& in) {
    CovariateSchema schema;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("schema line " + std::to_string(lineno) +
                                     ": expected 'name = cat1,cat2*,...'");
        Covariate cov;
        cov.name = trim(t.substr(0, eq));
        for (auto& tok : split(t.substr(eq + 1), ',')) {
            std::string cat = trim(tok);
            if (!cat.empty() && cat.back() == '*') {
                cat = trim(cat.substr(0, cat.size() - 1));
                if (!cov.reference.empty())
                    throw std::runtime_error("schema line " + std::to_string(lineno) +
                                             ": multiple reference marks");
                cov.reference = cat;
            }
            cov.categories.push_back(cat);
        }
        schema.covariates.push_back(std::move(cov));
    }
    schema.validate();
    return schema;
}

CovariateSchema parse_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file: " + path);
    return parse_schema(in);
}

void resolve_references(CovariateSchema& schema,
                        const std::vector<IndividualRecord>& records) {
    for (auto& cov : schema.covariates) {
        if (!cov.reference.empty()) continue;
        std::vector<std::size_t> freq(cov.categories.size(), 0);
        for (const auto& rec : records) {
            auto it = rec.covariates.find(cov.name);
            if (it == rec.covariates.end()) continue;
            auto pos = std::find(cov.categories.begin(), cov.categories.end(), it->second);
            if (pos != cov.categories.end())
                ++freq[static_cast<std::size_t>(pos - cov.categories.begin())];
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < freq.size(); ++i)
            if (freq[i] > freq[best]) best = i;
        cov.reference = cov.categories[best];
    }
}

std::vector<IndividualRecord> load_records(std::istream& in,
                                           const CovariateSchema& schema) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty input: missing header row");
    auto header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header.size() < 3 || header[0] != "entry_age" || header[1] != "exit_age" ||
        header[2] != "event")
        throw std::runtime_error(
            "header must start with 'entry_age,exit_age,event'");
    // Schema covariates must all be present; extra columns ride along.
    for (const auto& cov : schema.covariates) {
        auto it = std::find(header.begin() + 3, header.end(), cov.name);
        if (it == header.end())
            throw std::runtime_error("missing column for covariate '" + cov.name + "'");
    }

    std::vector<IndividualRecord> records;
    std::size_t row = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row;
        std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = split(t, ',');
        if (fields.size() != header.size())
            row_error(row, "expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
        IndividualRecord rec;
        rec.entry_age = parse_number(trim(fields[0]), "entry_age", row);
        rec.exit_age = parse_number(trim(fields[1]), "exit_age", row);
        std::string ev = trim(fields[2]);
        if (ev == "1")
            rec.event = true;
        else if (ev == "0")
            rec.event = false;
        else
            row_error(row, "event must be 0 or 1, got '" + ev + "'");
        if (!(rec.entry_age > 0.0) || !std::isfinite(rec.entry_age) ||
            !(rec.exit_age > 0.0) || !std::isfinite(rec.exit_age))
            row_error(row, "ages must be finite and positive");
        if (rec.exit_age < rec.entry_age)
            row_error(row, "exit_age < entry_age");
        for (std::size_t j = 3; j < header.size(); ++j)
            rec.covariates[header[j]] = trim(fields[j]);
        for (const auto& cov : schema.covariates) {
            const std::string& label = rec.covariates[cov.name];
            if (std::find(cov.categories.begin(), cov.categories.end(), label) ==
                cov.categories.end())
                row_error(row, "unknown category '" + label + "' for covariate '" +
                                   cov.name + "'");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<IndividualRecord> load_records_file(const std::string& path,
                                                const CovariateSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return load_records(in, schema);
}

void write_records(std::ostream& out, const std::vector<IndividualRecord>& records,
                   const CovariateSchema& schema) {
    out << "entry_age,exit_age,event";
    for (const auto& cov : schema.covariates) out << ',' << cov.name;
    out << '\n';
    for (const auto& rec : records) {
        out << format_double(rec.entry_age) << ',' << format_double(rec.exit_age) << ','
            << (rec.event ? '1' : '0');
        for (const auto& cov : schema.covariates) out << ',' << rec.covariates.at(cov.name);
        out << '\n';
    }
}

std::vector<double> encode_profile(const std::map<std::string, std::string>& labels,
                                   const CovariateSchema& schema) {
    if (!schema.resolved())
        throw std::invalid_argument("encode_profile: schema has unresolved references");
    std::vector<double> row;
    row.reserve(schema.design_dim());
    row.push_back(1.0);
    for (const auto& cov : schema.covariates) {
        auto it = labels.find(cov.name);
        if (it == labels.end())
            throw std::invalid_argument("encode_profile: missing label for covariate '" +
                                        cov.name + "'");
        const std::string& label = it->second;
        if (std::find(cov.categories.begin(), cov.categories.end(), label) ==
            cov.categories.end())
            throw std::invalid_argument("encode_profile: unknown category '" + label +
                                        "' for covariate '" + cov.name + "'");
        for (const auto& cat : cov.categories)
            if (cat != cov.reference) row.push_back(cat == label ? 1.0 : 0.0);
    }
    return row;
}

std::map<std::string, std::string> decode_profile(const std::vector<double>& row,
                                                  const CovariateSchema& schema) {
    if (row.size() != schema.design_dim() || row.empty() || row[0] != 1.0)
        throw std::invalid_argument("decode_profile: malformed design row");
    std::map<std::string, std::string> labels;
    std::size_t j = 1;
    for (const auto& cov : schema.covariates) {
        std::string found = cov.reference;
        for (const auto& cat : cov.categories) {
            if (cat == cov.reference) continue;
            double v = row[j++];
            if (v == 1.0) {
                if (found != cov.reference)
                    throw std::invalid_argument(
                        "decode_profile: multiple indicators set for '" + cov.name + "'");
                found = cat;
            } else if (v != 0.0) {
                throw std::invalid_argument("decode_profile: non-indicator entry");
            }
        }
        labels[cov.name] = found;
    }
    return labels;
}

ExtractResult to_exceedances(const std::vector<IndividualRecord>& records,
                             const ModelSpec& spec) {
    if (!(spec.threshold_u > 0.0))
        throw std::invalid_argument("to_exceedances: threshold must be > 0");
    ExtractResult out;
    out.data.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.exit_age <= spec.threshold_u) {
            ++out.dropped_below_threshold;
            continue;
        }
        Exceedance e;
        e.y = rec.exit_age - spec.threshold_u;
        e.a = std::max(rec.entry_age - spec.threshold_u, 0.0);
        if (!(e.a < e.y)) {  // entry and exit coincide above the threshold
            ++out.dropped_degenerate;
            continue;
        }
        e.event = rec.event;
        e.design_row = encode_profile(rec.covariates, spec.schema);
        out.data.push_back(std::move(e));
    }
    out.kept = out.data.size();
    return out;
}

namespace {

// Band index under the (a, b] convention with under/overflow bands:
// 0 = (-inf, breaks[0]], k = (breaks[k-1], breaks[k]], last = (breaks.back(), inf).
template <typename T>
std::size_t band_index(T value, const std::vector<T>& breaks) {
    std::size_t i = 0;
    while (i < breaks.size() && value > breaks[i]) ++i;
    return i;
}

template <typename T>
std::vector<std::string> band_labels(const std::vector<T>& breaks) {
    auto str = [](T v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    std::vector<std::string> labels;
    labels.push_back("<=" + str(breaks.front()));
    for (std::size_t i = 1; i < breaks.size(); ++i)
        labels.push_back("(" + str(breaks[i - 1]) + "," + str(breaks[i]) + "]");
    labels.push_back(str(breaks.back()) + "+");
    return labels;
}

}  // namespace

ContingencyTable contingency_summary(const std::vector<IndividualRecord>& records,
                                     const std::vector<double>& age_breaks,
                                     const std::vector<int>& period_breaks) {
    if (age_breaks.empty())
        throw std::invalid_argument("contingency_summary: need at least one age break");
    if (!std::is_sorted(age_breaks.begin(), age_breaks.end()) ||
        std::adjacent_find(age_breaks.begin(), age_breaks.end()) != age_breaks.end())
        throw std::invalid_argument("contingency_summary: age breaks must be strictly increasing");
    if (!std::is_sorted(period_breaks.begin(), period_breaks.end()) ||
        std::adjacent_find(period_breaks.begin(), period_breaks.end()) != period_breaks.end())
        throw std::invalid_argument(
            "contingency_summary: period breaks must be strictly increasing");

    const bool has_period =
        !period_breaks.empty() &&
        std::any_of(records.begin(), records.end(), [](const IndividualRecord& r) {
            return r.covariates.count("period") > 0;
        });

    ContingencyTable t;
    t.age_bands = band_labels(age_breaks);
    t.period_bands =
        has_period ? band_labels(period_breaks) : std::vector<std::string>{"all"};
    t.counts.assign(t.age_bands.size(),
                    std::vector<std::size_t>(t.period_bands.size(), 0));

    for (const auto& rec : records) {
        std::size_t i = band_index(rec.exit_age, age_breaks);
        std::size_t j = 0;
        if (has_period) {
            auto it = rec.covariates.find("period");
            int year = 0;
            if (it != rec.covariates.end()) year = std::stoi(it->second);
            j = band_index(year, period_breaks);
        }
        ++t.counts[i][j];
    }
    t.age_totals.assign(t.age_bands.size(), 0);
    t.period_totals.assign(t.period_bands.size(), 0);
    for (std::size_t i = 0; i < t.age_bands.size(); ++i)
        for (std::size_t j = 0; j < t.period_bands.size(); ++j) {
            t.age_totals[i] += t.counts[i][j];
            t.period_totals[j] += t.counts[i][j];
            t.total += t.counts[i][j];
        }
    return t;
}

}  // namespace lifetail
