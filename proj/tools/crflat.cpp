#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "crflat/pipeline.hpp"

namespace {

std::string exit_code_table() {
  using crflat::ErrorCode;
  const ErrorCode codes[] = {
      ErrorCode::ParseError,          ErrorCode::SchemaError,
      ErrorCode::DegreeTooHigh,       ErrorCode::ConfigError,
      ErrorCode::IoError,             ErrorCode::NotComplexPoint,
      ErrorCode::JetUnavailable,      ErrorCode::NotFlat,
      ErrorCode::NotNormalForm,       ErrorCode::NotElliptic,
      ErrorCode::DegenerateDefiningFunctions, ErrorCode::NotCRPoint,
      ErrorCode::MinimalityDetected,  ErrorCode::ZeroLeviForm,
      ErrorCode::IndeterminateRank,   ErrorCode::AtComplexPoint,
      ErrorCode::StepFailure,         ErrorCode::NonClosure,
      ErrorCode::TransversalMiss,     ErrorCode::PoleClassificationFailure,
      ErrorCode::HypothesisViolation, ErrorCode::BaseTooClose,
      ErrorCode::LineSliceEmpty,      ErrorCode::NegativeSheetCount,
      ErrorCode::InconsistentSheetCount, ErrorCode::NonGraphOrbit,
      ErrorCode::PoorFit,             ErrorCode::MeshTooCoarse,
      ErrorCode::NoOverlap,           ErrorCode::AllLevelsExceptional,
      ErrorCode::PoleCapFailure,      ErrorCode::BoundaryCollision,
      ErrorCode::EmptyInput,          ErrorCode::GlueInfeasible,
      ErrorCode::VerificationFailed,
  };
  std::string out = "\nExit codes:\n   0  success\n   2  usage error\n";
  for (ErrorCode c : codes) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "  %2d  %s\n", int(c), std::string(crflat::to_string(c)).c_str());
    out += buf;
  }
  out += "\nCRFLAT_THREADS sets the worker count; results do not depend on it.\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levi-flat fillings of codimension-2 surfaces with elliptic flat complex points"};
  app.footer(exit_code_table());
  app.require_subcommand(1);

  std::string surface_path, config_path, out_dir;
  const char* names[][2] = {
      {"classify", "classify the complex points and check the CR hypotheses"},
      {"orbits", "trace the CR orbits and the level function"},
      {"fill", "fill every level slice by a holomorphic chain"},
      {"build", "assemble the Levi-flat variety and export the mesh"},
      {"verify", "run every verification on the built variety"},
      {"pipeline", "all stages, classify through verify"},
  };
  for (auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--surface", surface_path, "surface definition (JSON)")->required();
    sub->add_option("--config", config_path, "run configuration (JSON)");
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const crflat::SurfaceModel s = crflat::parse_surface(crflat::read_text(surface_path));
    crflat::RunConfig config;
    if (!config_path.empty()) {
      std::string text;
      try {
        text = crflat::read_text(config_path);
      } catch (const crflat::Error& e) {
        throw crflat::Error(crflat::ErrorCode::ConfigError, e.what());
      }
      config = crflat::parse_config(text);
    }
    if (out_dir.empty()) out_dir = config.out.empty() ? "crflat-out" : config.out;
    const auto result = crflat::run_pipeline(s, config, *crflat::stage_from_name(command), out_dir);
    for (const auto& a : result.artifacts) std::printf("wrote %s/%s\n", out_dir.c_str(), a.c_str());
    if (result.exit_code != 0) std::fprintf(stderr, "crflat: %s\n", result.message.c_str());
    return result.exit_code;
  } catch (const crflat::Error& e) {
    std::fprintf(stderr, "crflat: %s\n", e.what());
    return e.exit_code();
  }
}
