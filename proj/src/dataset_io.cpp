#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

#include <json.hpp>

#include "funcause/fdata.hpp"

namespace funcause {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view text, std::size_t row, std::string_view column) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw SchemaError(row, "column " + std::string(column) + ": cannot parse '" + std::string(text) + "'");
    if (!std::isfinite(v)) throw SchemaError(row, "column " + std::string(column) + ": missing or non-finite value");
    return v;
}

// Column layout derived from the header line.
struct CsvLayout {
    std::size_t d = 0;
    std::size_t outcome_points = 0;
    std::size_t curve_points = 0;
    std::size_t columns() const { return 2 + d + outcome_points + curve_points; }
};

CsvLayout parse_header(std::string_view line) {
    const auto cols = split_commas(line);
    if (cols.size() < 2 || trim(cols[0]) != "id" || trim(cols[1]) != "treatment")
        throw SchemaError(0, "header must start with id,treatment");
    CsvLayout layout;
    std::size_t i = 2;
    auto numbered = [&](std::string_view prefix, std::size_t expected, bool padded, std::size_t count) {
        const auto name = trim(cols[i]);
        if (name.substr(0, prefix.size()) != prefix) return false;
        const std::string want = padded ? column_index(expected, count) : std::to_string(expected);
        if (name.substr(prefix.size()) != want)
            throw SchemaError(0, "unexpected header column '" + std::string(name) + "'");
        return true;
    };
    auto count_prefix = [&](std::string_view prefix) {
        std::size_t c = 0;
        for (std::size_t k = i; k < cols.size() && trim(cols[k]).substr(0, prefix.size()) == prefix; ++k) ++c;
        return c;
    };
    const std::size_t nv = count_prefix("v_");
    for (std::size_t k = 1; k <= nv; ++k, ++i) numbered("v_", k, false, nv);
    layout.d = nv;
    const std::size_t ny = count_prefix("y_");
    for (std::size_t k = 1; k <= ny; ++k, ++i) numbered("y_", k, true, ny);
    layout.outcome_points = ny;
    const std::size_t nc = count_prefix("vc_");
    for (std::size_t k = 1; k <= nc; ++k, ++i) numbered("vc_", k, true, nc);
    layout.curve_points = nc;
    if (i != cols.size()) throw SchemaError(0, "unexpected header column '" + std::string(trim(cols[i])) + "'");
    if (ny < 2) throw SchemaError(0, "at least 2 outcome columns are required");
    if (nc == 1) throw SchemaError(0, "covariate curves need at least 2 columns");
    return layout;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(0, "empty input");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    const CsvLayout layout = parse_header(line);
    const Grid og = Grid::uniform(layout.outcome_points);
    std::optional<Grid> cg;
    if (layout.curve_points > 0) cg = Grid::uniform(layout.curve_points);

    std::vector<ObservationalSample> samples;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cols = split_commas(line);
        if (cols.size() != layout.columns())
            throw SchemaError(row, "expected " + std::to_string(layout.columns()) + " columns, found " +
                                       std::to_string(cols.size()));
        std::string id(trim(cols[0]));
        if (id.empty()) throw SchemaError(row, "empty id");
        const double treatment = parse_number(cols[1], row, "treatment");
        std::size_t c = 2;
        Eigen::VectorXd covariates(static_cast<Eigen::Index>(layout.d));
        for (std::size_t k = 0; k < layout.d; ++k, ++c)
            covariates[static_cast<Eigen::Index>(k)] = parse_number(cols[c], row, "v_" + std::to_string(k + 1));
        Eigen::VectorXd y(static_cast<Eigen::Index>(layout.outcome_points));
        for (std::size_t k = 0; k < layout.outcome_points; ++k, ++c)
            y[static_cast<Eigen::Index>(k)] = parse_number(cols[c], row, "y");
        ObservationalSample s{std::move(id), treatment, std::move(covariates), std::nullopt, Curve(og, std::move(y))};
        if (cg) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(layout.curve_points));
            for (std::size_t k = 0; k < layout.curve_points; ++k, ++c)
                v[static_cast<Eigen::Index>(k)] = parse_number(cols[c], row, "vc");
            s.covariate_curve = Curve(*cg, std::move(v));
        }
        samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples));
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
    const std::size_t d = ds.covariate_dim();
    const std::size_t T = ds.outcome_grid().size();
    const std::size_t Tc = ds.has_covariate_curves() ? ds.covariate_grid()->size() : 0;
    out << "id,treatment";
    for (std::size_t k = 1; k <= d; ++k) out << ",v_" << k;
    for (std::size_t k = 1; k <= T; ++k) out << ",y_" << column_index(k, T);
    for (std::size_t k = 1; k <= Tc; ++k) out << ",vc_" << column_index(k, Tc);
    out << '\n';
    for (const auto& s : ds.samples()) {
        if (s.id.find_first_of(",\n\r\"") != std::string::npos)
            throw SchemaError(0, "id '" + s.id + "' cannot be written to CSV");
        out << s.id << ',' << format_double(s.treatment);
        for (Eigen::Index k = 0; k < s.covariates.size(); ++k) out << ',' << format_double(s.covariates[k]);
        for (Eigen::Index k = 0; k < s.outcome.values().size(); ++k) out << ',' << format_double(s.outcome.values()[k]);
        if (s.covariate_curve)
            for (Eigen::Index k = 0; k < s.covariate_curve->values().size(); ++k)
                out << ',' << format_double(s.covariate_curve->values()[k]);
        out << '\n';
    }
}

namespace {

Eigen::VectorXd to_vector(const nlohmann::json& arr, std::size_t row, const char* field) {
    if (!arr.is_array()) throw SchemaError(row, std::string(field) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
        if (!arr[k].is_number()) throw SchemaError(row, std::string(field) + " holds a non-number");
        v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
    }
    return v;
}

Grid grid_from_json(const nlohmann::json& arr, const char* field) {
    const Eigen::VectorXd pts = to_vector(arr, 0, field);
    try {
        return Grid(std::vector<double>(pts.data(), pts.data() + pts.size()));
    } catch (const DomainError& e) {
        throw SchemaError(0, std::string(field) + ": " + e.what());
    }
}

}  // namespace

Dataset read_dataset_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.contains("outcome_grid") || !doc.contains("samples"))
        throw SchemaError(0, "JSON dataset needs outcome_grid and samples");
    const Grid og = grid_from_json(doc["outcome_grid"], "outcome_grid");
    std::optional<Grid> cg;
    if (doc.contains("covariate_grid") && !doc["covariate_grid"].is_null())
        cg = grid_from_json(doc["covariate_grid"], "covariate_grid");

    std::vector<ObservationalSample> samples;
    std::size_t row = 0;
    for (const auto& js : doc["samples"]) {
        ++row;
        if (!js.contains("id") || !js.contains("treatment") || !js.contains("outcome"))
            throw SchemaError(row, "sample needs id, treatment and outcome");
        std::string id = js["id"].is_string() ? js["id"].get<std::string>() : js["id"].dump();
        if (!js["treatment"].is_number()) throw SchemaError(row, "treatment must be a number");
        const double treatment = js["treatment"].get<double>();
        Eigen::VectorXd covariates =
            js.contains("covariates") ? to_vector(js["covariates"], row, "covariates") : Eigen::VectorXd();
        Eigen::VectorXd y = to_vector(js["outcome"], row, "outcome");
        if (static_cast<std::size_t>(y.size()) != og.size())
            throw SchemaError(row, "outcome has " + std::to_string(y.size()) + " values, grid has " +
                                       std::to_string(og.size()));
        if (!y.allFinite()) throw SchemaError(row, "non-finite outcome value");
        ObservationalSample s{std::move(id), treatment, std::move(covariates), std::nullopt, Curve(og, std::move(y))};
        if (js.contains("covariate_curve") && !js["covariate_curve"].is_null()) {
            if (!cg) throw SchemaError(row, "covariate_curve given without covariate_grid");
            Eigen::VectorXd v = to_vector(js["covariate_curve"], row, "covariate_curve");
            if (static_cast<std::size_t>(v.size()) != cg->size())
                throw SchemaError(row, "covariate_curve length does not match covariate_grid");
            if (!v.allFinite()) throw SchemaError(row, "non-finite covariate-curve value");
            s.covariate_curve = Curve(*cg, std::move(v));
        }
        samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples));
}

void write_dataset_json(const Dataset& ds, std::ostream& out) {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json doc;
    const auto og = ds.outcome_grid().points();
    doc["outcome_grid"] = std::vector<double>(og.begin(), og.end());
    if (auto cg = ds.covariate_grid()) {
        doc["covariate_grid"] = std::vector<double>(cg->points().begin(), cg->points().end());
    } else {
        doc["covariate_grid"] = nullptr;
    }
    doc["samples"] = nlohmann::json::array();
    for (const auto& s : ds.samples()) {
        nlohmann::json js;
        js["id"] = s.id;
        js["treatment"] = s.treatment;
        js["covariates"] = vec(s.covariates);
        js["outcome"] = vec(s.outcome.values());
        if (s.covariate_curve) js["covariate_curve"] = vec(s.covariate_curve->values());
        doc["samples"].push_back(std::move(js));
    }
    out << doc.dump(1) << '\n';
}

}  // namespace funcause
