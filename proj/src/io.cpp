#include "clfm/io.hpp"

#include "clfm/diagnostics.hpp"
#include "clfm/linalg.hpp"
#include "clfm/portfolio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace clfm::io {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Skips blank lines and '#' comments, tracking line numbers for messages.
class LineReader {
  public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::optional<std::string> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            line = trim(line);
            if (line.empty() || line[0] == '#') {
                continue;
            }
            return line;
        }
        return std::nullopt;
    }

    int line_no() const { return line_no_; }

  private:
    std::istream& in_;
    int line_no_ = 0;
};

[[noreturn]] void fail(const LineReader& reader, const std::string& record,
                       const std::string& message) {
    std::ostringstream ss;
    ss << "parse error at line " << reader.line_no();
    if (!record.empty()) {
        ss << " (record '" << record << "')";
    }
    ss << ": " << message;
    throw parse_error(ss.str());
}

std::vector<double> parse_values(LineReader& reader, const std::string& record,
                                 const std::string& text) {
    std::vector<double> values;
    const char* p = text.c_str();
    while (*p != '\0') {
        while (*p == ' ' || *p == '\t') {
            ++p;
        }
        if (*p == '\0') {
            break;
        }
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) {
            fail(reader, record, "expected a number, found '" + std::string(p) + "'");
        }
        if (!std::isfinite(v)) {
            fail(reader, record,
                 "non-finite number '" + std::string(p, static_cast<std::size_t>(end - p)) + "'");
        }
        values.push_back(v);
        p = end;
    }
    return values;
}

Vector parse_vector_line(LineReader& reader, const std::string& record,
                         const std::string& text, Index expected, const char* what) {
    const auto values = parse_values(reader, record, text);
    if (static_cast<Index>(values.size()) != expected) {
        std::ostringstream ss;
        ss << what << " has " << values.size() << " values, expected " << expected;
        fail(reader, record, ss.str());
    }
    Vector out(expected);
    for (Index i = 0; i < expected; ++i) {
        out(i) = values[static_cast<std::size_t>(i)];
    }
    return out;
}

Matrix parse_matrix_block(LineReader& reader, const std::string& record, Index rows,
                          Index cols, const char* what) {
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto line = reader.next();
        if (!line) {
            std::ostringstream ss;
            ss << "unexpected end of input inside " << what << " (row " << i + 1 << " of "
               << rows << ")";
            fail(reader, record, ss.str());
        }
        const auto values = parse_values(reader, record, *line);
        if (static_cast<Index>(values.size()) != cols) {
            std::ostringstream ss;
            ss << what << " row " << i + 1 << " has " << values.size()
               << " values, expected " << cols;
            fail(reader, record, ss.str());
        }
        for (Index j = 0; j < cols; ++j) {
            out(i, j) = values[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

std::string expect_keyword_line(LineReader& reader, const std::string& record,
                                const std::string& keyword) {
    const auto line = reader.next();
    if (!line) {
        fail(reader, record, "unexpected end of input, expected '" + keyword + "'");
    }
    if (*line == keyword) {
        return "";
    }
    if (line->size() > keyword.size() && line->compare(0, keyword.size(), keyword) == 0 &&
        (*line)[keyword.size()] == ' ') {
        return trim(line->substr(keyword.size() + 1));
    }
    fail(reader, record, "expected '" + keyword + "', found '" + *line + "'");
}

void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_vector_line(std::string& out, const char* keyword, const Vector& v) {
    out += keyword;
    for (Index i = 0; i < v.size(); ++i) {
        out += ' ';
        append_double(out, v(i));
    }
    out += '\n';
}

void append_matrix_block(std::string& out, const char* keyword, const Matrix& m) {
    out += keyword;
    out += '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out += ' ';
            }
            append_double(out, m(i, j));
        }
        out += '\n';
    }
}

const char* recipe_kind_name(builders::WeightKind kind) {
    switch (kind) {
        case builders::WeightKind::ols:
            return "ols";
        case builders::WeightKind::gls:
            return "gls";
        case builders::WeightKind::general_form:
            return "general";
        case builders::WeightKind::gls_type_generative:
            return "gls-generative";
    }
    return "?";
}

nlohmann::ordered_json vector_to_json(const Vector& v) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

}  // namespace

MomentFile parse_moment_file(std::istream& in) {
    LineReader reader(in);
    const auto header = reader.next();
    if (!header || *header != kPanelHeader) {
        fail(reader, "", std::string("expected header '") + kPanelHeader + "'");
    }

    MomentFile file;
    while (true) {
        const auto line = reader.next();
        if (!line) {
            break;
        }
        if (line->compare(0, 5, "date ") != 0 && *line != "date") {
            fail(reader, "", "expected 'date <label>', found '" + *line + "'");
        }
        PanelRecord record;
        record.date_label = *line == "date" ? "" : trim(line->substr(5));
        const std::string& label = record.date_label;

        const std::string dims = expect_keyword_line(reader, label, "dims");
        const auto dims_values = parse_values(reader, label, dims);
        if (dims_values.size() != 2 || dims_values[0] < 1 || dims_values[1] < 1 ||
            dims_values[0] != std::floor(dims_values[0]) ||
            dims_values[1] != std::floor(dims_values[1])) {
            fail(reader, label, "dims must be two positive integers");
        }
        const Index n = static_cast<Index>(dims_values[0]);
        const Index m = static_cast<Index>(dims_values[1]);

        record.moments.date_label = label;
        record.moments.mu = parse_vector_line(
            reader, label, expect_keyword_line(reader, label, "mu"), n, "mu");
        expect_keyword_line(reader, label, "sigma");
        record.moments.sigma = parse_matrix_block(reader, label, n, n, "sigma");
        expect_keyword_line(reader, label, "phi");
        record.phi.phi = parse_matrix_block(reader, label, n, m, "phi");

        const auto weights_line = reader.next();
        if (!weights_line) {
            fail(reader, label, "unexpected end of input, expected 'w' or 'recipe'");
        }
        if (*weights_line == "w") {
            record.w = FactorWeights{parse_matrix_block(reader, label, n, m, "w")};
        } else if (weights_line->compare(0, 7, "recipe ") == 0) {
            builders::WeightRecipe recipe;
            const std::string kind = trim(weights_line->substr(7));
            if (kind == "ols") {
                recipe.kind = builders::WeightKind::ols;
            } else if (kind == "gls") {
                recipe.kind = builders::WeightKind::gls;
                expect_keyword_line(reader, label, "sigma_eps");
                recipe.sigma_eps = parse_matrix_block(reader, label, n, n, "sigma_eps");
            } else if (kind == "general") {
                recipe.kind = builders::WeightKind::general_form;
                expect_keyword_line(reader, label, "r");
                recipe.r = parse_matrix_block(reader, label, m, m, "r");
                expect_keyword_line(reader, label, "s");
                recipe.s = parse_matrix_block(reader, label, n, n, "s");
            } else if (kind == "gls-generative") {
                recipe.kind = builders::WeightKind::gls_type_generative;
                expect_keyword_line(reader, label, "sigma_eta");
                recipe.sigma_eta = parse_matrix_block(reader, label, n, n, "sigma_eta");
            } else {
                fail(reader, label, "unknown recipe kind '" + kind + "'");
            }
            record.recipe = recipe;
        } else {
            fail(reader, label, "expected 'w' or 'recipe <kind>', found '" + *weights_line + "'");
        }

        expect_keyword_line(reader, label, "end");
        file.records.push_back(std::move(record));
    }
    return file;
}

MomentFile parse_moment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw parse_error("cannot open file '" + path + "'");
    }
    return parse_moment_file(in);
}

std::string serialize_moment_file(const MomentFile& file) {
    std::string out;
    out += kPanelHeader;
    out += '\n';
    for (const PanelRecord& record : file.records) {
        out += "date ";
        out += record.date_label;
        out += '\n';
        out += "dims ";
        out += std::to_string(record.moments.n());
        out += ' ';
        out += std::to_string(record.phi.m());
        out += '\n';
        append_vector_line(out, "mu", record.moments.mu);
        append_matrix_block(out, "sigma", record.moments.sigma);
        append_matrix_block(out, "phi", record.phi.phi);
        if (record.w) {
            append_matrix_block(out, "w", record.w->w);
        } else if (record.recipe) {
            out += "recipe ";
            out += recipe_kind_name(record.recipe->kind);
            out += '\n';
            if (record.recipe->sigma_eps) {
                append_matrix_block(out, "sigma_eps", *record.recipe->sigma_eps);
            }
            if (record.recipe->r) {
                append_matrix_block(out, "r", *record.recipe->r);
            }
            if (record.recipe->s) {
                append_matrix_block(out, "s", *record.recipe->s);
            }
            if (record.recipe->sigma_eta) {
                append_matrix_block(out, "sigma_eta", *record.recipe->sigma_eta);
            }
        } else {
            throw std::invalid_argument(
                "serialize_moment_file: record '" + record.date_label +
                "' has neither weights nor a recipe");
        }
        out += "end\n";
    }
    return out;
}

generative::GenerativeSpec parse_generative_spec(std::istream& in) {
    LineReader reader(in);
    const auto header = reader.next();
    if (!header || *header != kGenSpecHeader) {
        fail(reader, "", std::string("expected header '") + kGenSpecHeader + "'");
    }
    const std::string record = "genspec";

    const std::string dims = expect_keyword_line(reader, record, "dims");
    const auto dims_values = parse_values(reader, record, dims);
    if (dims_values.size() != 2 || dims_values[0] < 1 || dims_values[1] < 1 ||
        dims_values[0] != std::floor(dims_values[0]) ||
        dims_values[1] != std::floor(dims_values[1])) {
        fail(reader, record, "dims must be two positive integers");
    }
    const Index n = static_cast<Index>(dims_values[0]);
    const Index m = static_cast<Index>(dims_values[1]);

    generative::GenerativeSpec spec;
    expect_keyword_line(reader, record, "phi");
    spec.phi = parse_matrix_block(reader, record, n, m, "phi");
    spec.mu_g = parse_vector_line(reader, record,
                                  expect_keyword_line(reader, record, "mu_g"), m, "mu_g");
    expect_keyword_line(reader, record, "sigma_g");
    spec.sigma_g = parse_matrix_block(reader, record, m, m, "sigma_g");
    expect_keyword_line(reader, record, "sigma_eta");
    spec.sigma_eta = parse_matrix_block(reader, record, n, n, "sigma_eta");
    expect_keyword_line(reader, record, "end");
    return spec;
}

generative::GenerativeSpec parse_generative_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw parse_error("cannot open file '" + path + "'");
    }
    return parse_generative_spec(in);
}

std::string serialize_generative_spec(const generative::GenerativeSpec& spec) {
    std::string out;
    out += kGenSpecHeader;
    out += '\n';
    out += "dims ";
    out += std::to_string(spec.n());
    out += ' ';
    out += std::to_string(spec.m());
    out += '\n';
    append_matrix_block(out, "phi", spec.phi);
    append_vector_line(out, "mu_g", spec.mu_g);
    append_matrix_block(out, "sigma_g", spec.sigma_g);
    append_matrix_block(out, "sigma_eta", spec.sigma_eta);
    out += "end\n";
    return out;
}

std::string serialize_samples(const std::vector<ReturnSample>& samples,
                              std::uint64_t seed) {
    std::string out;
    out += kSamplesHeader;
    out += '\n';
    out += "seed ";
    out += std::to_string(seed);
    out += '\n';
    out += "dates ";
    out += std::to_string(samples.size());
    out += '\n';
    out += "n ";
    out += std::to_string(samples.empty() ? 0 : samples.front().x.size());
    out += '\n';
    for (const ReturnSample& sample : samples) {
        append_vector_line(out, "x", sample.x);
    }
    out += "end\n";
    return out;
}

FactorWeights resolve_weights(const PanelRecord& record, const Tolerance& tol) {
    if (record.w && record.recipe) {
        throw std::invalid_argument("record '" + record.date_label +
                                    "' has both weights and a recipe");
    }
    if (record.w) {
        return *record.w;
    }
    if (record.recipe) {
        return builders::build_from_recipe(record.phi, *record.recipe, tol);
    }
    throw std::invalid_argument("record '" + record.date_label +
                                "' has neither weights nor a recipe");
}

namespace {

nlohmann::ordered_json diagnose_date(const std::string& label,
                                     const CrossSectionMoments& moments,
                                     const Characteristics& phi, const FactorWeights& w,
                                     const std::string& weight_source,
                                     const DiagnosticsConfig& config, RunResult& result) {
    nlohmann::ordered_json out;
    out["date"] = label;
    out["n"] = moments.n();
    out["m"] = phi.m();
    out["weight_source"] = weight_source;

    const ValidationReport validation =
        validate_cross_section(moments, phi, w, config.tol);
    out["validation"] = validation.violations;
    if (!validation.ok()) {
        out["error"] = "cross-section failed validation; diagnostics skipped";
        ++result.data_errors;
        return out;
    }

    const auto reports = diagnostics::run_all(moments, phi, w, config.tol);
    nlohmann::ordered_json conditions = nlohmann::ordered_json::array();
    for (const auto& report : reports) {
        nlohmann::ordered_json c;
        c["id"] = std::string(diagnostics::to_string(report.id));
        c["holds"] = report.holds;
        c["residual"] = report.residual;
        if (report.witness) {
            c["witness"] = vector_to_json(*report.witness);
        }
        if (!report.detail.empty()) {
            c["detail"] = report.detail;
        }
        conditions.push_back(std::move(c));
    }
    out["conditions"] = std::move(conditions);

    const bool nondegenerate =
        diagnostics::factor_model_nondegenerate(phi, w, config.tol);
    out["nondegenerate"] = nondegenerate;
    const auto graph =
        diagnostics::verify_implication_graph(reports, nondegenerate, config.tol);
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& edge : graph.edges) {
        nlohmann::ordered_json e;
        e["edge"] = edge.name;
        e["status"] = std::string(diagnostics::to_string(edge.status));
        edges.push_back(std::move(e));
        if (edge.status == diagnostics::EdgeStatus::violated) {
            ++result.violated_edges;
        }
    }
    out["implication_graph"] = std::move(edges);

    const auto na = portfolio::check_no_arbitrage(moments, config.tol);
    nlohmann::ordered_json na_json;
    na_json["holds"] = na.holds;
    na_json["residual"] = na.residual;
    if (!na.holds) {
        na_json["arbitrage_component"] = vector_to_json(na.arbitrage_component);
    }
    out["no_arbitrage"] = std::move(na_json);

    const auto fm = derive_factor_moments(moments, phi, w, config.tol);
    const auto asset_mve = portfolio::mve_unchecked(moments.mu, moments.sigma, config.tol);
    const auto factor_mve = portfolio::factor_mve(fm, config.tol);
    if (na.holds) {
        out["mve"] = {{"weights", vector_to_json(asset_mve.weights)},
                      {"sr_squared", asset_mve.sr_squared}};
    }
    out["factor_mve"] = {{"weights", vector_to_json(factor_mve.weights)},
                         {"sr_squared", factor_mve.sr_squared}};
    out["sharpe"] = {{"sr_squared", asset_mve.sr_squared},
                     {"factor_sr_squared", factor_mve.sr_squared},
                     {"gap", asset_mve.sr_squared - factor_mve.sr_squared}};

    if (na.holds) {
        const auto asset_sdf = portfolio::sdf_unchecked(moments.mu, moments.sigma, config.tol);
        out["sdf"] = {{"intercept", asset_sdf.intercept},
                      {"loadings", vector_to_json(asset_sdf.loadings)}};
        const auto factor_na = linalg::in_image(fm.mu_f, fm.sigma_f, config.tol);
        if (factor_na.in_image) {
            const auto factor_sdf = portfolio::sdf_unchecked(fm.mu_f, fm.sigma_f, config.tol);
            out["factor_sdf"] = {{"intercept", factor_sdf.intercept},
                                 {"loadings", vector_to_json(factor_sdf.loadings)}};
        }
    }
    return out;
}

nlohmann::ordered_json run_header(const DiagnosticsConfig& config) {
    nlohmann::ordered_json out;
    out["schema"] = "clfm-diagnostics-v1";
    out["version"] = kVersion;
    out["tolerances"] = {{"rel_rank_tol", config.tol.rel_rank_tol},
                         {"abs_residual_tol", config.tol.abs_residual_tol}};
    out["seed"] = config.seed;
    out["strict"] = config.strict;
    out["dates"] = nlohmann::ordered_json::array();
    return out;
}

void finish(nlohmann::ordered_json& out, const RunResult& result, std::size_t dates) {
    out["summary"] = {{"dates", dates},
                      {"violated_edges", result.violated_edges},
                      {"data_errors", result.data_errors}};
}

}  // namespace

RunResult run_diagnostics(const MomentFile& file, const DiagnosticsConfig& config) {
    RunResult result;
    result.output = run_header(config);
    for (const PanelRecord& record : file.records) {
        nlohmann::ordered_json date_output;
        try {
            const FactorWeights w = resolve_weights(record, config.tol);
            const std::string source =
                record.w ? "file" : recipe_kind_name(record.recipe->kind);
            date_output = diagnose_date(record.date_label, record.moments, record.phi, w,
                                        source, config, result);
        } catch (const std::exception& e) {
            date_output["date"] = record.date_label;
            date_output["error"] = e.what();
            ++result.data_errors;
        }
        result.output["dates"].push_back(std::move(date_output));
    }
    finish(result.output, result, file.records.size());
    return result;
}

RunResult run_diagnostics(const generative::GenerativeSpec& spec,
                          const DiagnosticsConfig& config) {
    RunResult result;
    result.output = run_header(config);
    nlohmann::ordered_json date_output;
    try {
        const auto weights = builders::build_gls_type_generative(spec, config.tol);
        const CrossSectionMoments moments = generative::implied_moments(spec, config.tol);
        date_output = diagnose_date("genspec", moments, Characteristics{spec.phi},
                                    weights.weights, "gls-generative", config, result);

        const auto report = generative::verify_spanning_construction(spec, config.tol);
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& check : report.checks) {
            checks.push_back({{"name", check.name},
                              {"holds", check.holds},
                              {"residual", check.residual}});
        }
        date_output["spanning_construction"] = {{"all_hold", report.all_hold()},
                                {"checks", std::move(checks)}};
    } catch (const std::exception& e) {
        date_output["date"] = "genspec";
        date_output["error"] = e.what();
        ++result.data_errors;
    }
    result.output["dates"].push_back(std::move(date_output));
    finish(result.output, result, 1);
    return result;
}

std::string render_text(const nlohmann::ordered_json& output) {
    std::ostringstream ss;
    ss << "clfm diagnostics " << output.value("version", "?") << "\n";
    if (output.contains("tolerances")) {
        ss << "tolerances: rel_rank_tol=" << output["tolerances"]["rel_rank_tol"]
           << " abs_residual_tol=" << output["tolerances"]["abs_residual_tol"] << "\n";
    }
    for (const auto& date : output.value("dates", nlohmann::ordered_json::array())) {
        ss << "date " << date.value("date", "?");
        if (date.contains("n")) {
            ss << " (n=" << date["n"].get<Index>() << ", m=" << date["m"].get<Index>()
               << ", weights=" << date.value("weight_source", "?") << ")";
        }
        ss << "\n";
        if (date.contains("error")) {
            ss << "  error: " << date["error"].get<std::string>() << "\n";
            continue;
        }
        for (const auto& v :
             date.value("validation", nlohmann::ordered_json::array())) {
            ss << "  validation: " << v.get<std::string>() << "\n";
        }
        if (date.contains("conditions")) {
            ss << "  conditions:\n";
            for (const auto& c : date["conditions"]) {
                ss << "    " << c["id"].get<std::string>() << "  "
                   << (c["holds"].get<bool>() ? "holds" : "fails")
                   << "  residual=" << c["residual"].get<double>() << "\n";
            }
        }
        if (date.contains("implication_graph")) {
            int violated = 0;
            for (const auto& e : date["implication_graph"]) {
                if (e["status"].get<std::string>() == "VIOLATED") {
                    ++violated;
                    ss << "  VIOLATED edge: " << e["edge"].get<std::string>() << "\n";
                }
            }
            ss << "  implication edges: " << date["implication_graph"].size()
               << " checked, " << violated << " violated\n";
        }
        if (date.contains("no_arbitrage")) {
            ss << "  no-arbitrage: "
               << (date["no_arbitrage"]["holds"].get<bool>() ? "holds" : "FAILS")
               << " (residual=" << date["no_arbitrage"]["residual"].get<double>() << ")\n";
        }
        if (date.contains("sharpe")) {
            ss << "  sr^2 assets=" << date["sharpe"]["sr_squared"].get<double>()
               << " factors=" << date["sharpe"]["factor_sr_squared"].get<double>()
               << " gap=" << date["sharpe"]["gap"].get<double>() << "\n";
        }
        if (date.contains("sdf")) {
            ss << "  sdf intercept=" << date["sdf"]["intercept"].get<double>() << "\n";
        }
        if (date.contains("spanning_construction")) {
            ss << "  generative checks: "
               << (date["spanning_construction"]["all_hold"].get<bool>() ? "all hold" : "FAILURES")
               << "\n";
            for (const auto& c : date["spanning_construction"]["checks"]) {
                ss << "    " << c["name"].get<std::string>() << "  "
                   << (c["holds"].get<bool>() ? "holds" : "FAILS")
                   << "  residual=" << c["residual"].get<double>() << "\n";
            }
        }
    }
    if (output.contains("summary")) {
        ss << "summary: dates=" << output["summary"]["dates"].get<std::size_t>()
           << " violated_edges=" << output["summary"]["violated_edges"].get<int>()
           << " data_errors=" << output["summary"]["data_errors"].get<int>() << "\n";
    }
    return ss.str();
}

}  // namespace clfm::io
