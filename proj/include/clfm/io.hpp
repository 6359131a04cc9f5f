#pragma once

#include "clfm/builders.hpp"
#include "clfm/generative.hpp"
#include "clfm/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clfm::io {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kPanelHeader = "clfm-panel v1";
inline constexpr const char* kGenSpecHeader = "clfm-genspec v1";
inline constexpr const char* kSamplesHeader = "clfm-samples v1";

/// Raised on malformed input files; the message names the line and record.
class parse_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One date of a moment panel file. Exactly one of `w` or `recipe` is present.
struct PanelRecord {
    std::string date_label;
    CrossSectionMoments moments;
    Characteristics phi;
    std::optional<FactorWeights> w;
    std::optional<builders::WeightRecipe> recipe;
};

struct MomentFile {
    std::vector<PanelRecord> records;
};

MomentFile parse_moment_file(std::istream& in);
MomentFile parse_moment_file(const std::string& path);
std::string serialize_moment_file(const MomentFile& file);

generative::GenerativeSpec parse_generative_spec(std::istream& in);
generative::GenerativeSpec parse_generative_spec(const std::string& path);
std::string serialize_generative_spec(const generative::GenerativeSpec& spec);

std::string serialize_samples(const std::vector<ReturnSample>& samples,
                              std::uint64_t seed);

/// Resolves a record's weights (given directly or through its recipe).
FactorWeights resolve_weights(const PanelRecord& record, const Tolerance& tol);

enum class OutputFormat { json, text };

struct DiagnosticsConfig {
    Tolerance tol{};
    bool strict = false;
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::json;
};

/// Full run result: the structured output plus the counters that drive the
/// process exit status.
struct RunResult {
    nlohmann::ordered_json output;
    int violated_edges = 0;
    int data_errors = 0;
};

RunResult run_diagnostics(const MomentFile& file, const DiagnosticsConfig& config);

/// Generative input mode: builds the spanning tradable model implied by the
/// spec, runs the same per-date diagnostics, and appends the closed-form
/// verification section.
RunResult run_diagnostics(const generative::GenerativeSpec& spec,
                          const DiagnosticsConfig& config);

std::string render_text(const nlohmann::ordered_json& output);

}  // namespace clfm::io
