#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "sprify/sprify.hpp"

namespace {

using namespace sprify;

constexpr int kExitYes = 0;
constexpr int kExitNo = 1;
constexpr int kExitError = 2;

bool color_enabled() { return ::isatty(STDOUT_FILENO) == 1 && std::getenv("NO_COLOR") == nullptr; }

std::string paint(const std::string& text, const char* code) {
  if (!color_enabled()) return text;
  return std::string("\033[") + code + "m" + text + "\033[0m";
}

std::string verdict_word(bool ok) {
  return ok ? paint("SPRifiable", "32") : paint("not SPRifiable", "31");
}

json complex_list_json(const std::vector<Complex>& zs) {
  json out = json::array();
  for (Complex z : zs) out.push_back(complex_to_json(z));
  return out;
}

std::string complex_list_str(const std::vector<Complex>& zs) {
  if (zs.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (i) out += ", ";
    out += format_complex(zs[i]);
  }
  return out;
}

void print_reasons(const std::vector<std::string>& reasons) {
  if (reasons.empty()) return;
  std::printf("reasons:\n");
  for (const std::string& r : reasons) std::printf("  - %s\n", r.c_str());
}

void emit_json(const json& j) { std::printf("%s\n", j.dump(2).c_str()); }

struct CommonFlags {
  double tol_rank = kDefaultRankTolRel;
  double tol_stab = 1e-9;
  bool as_json = false;

  Tolerances tolerances() const {
    Tolerances tol;
    tol.rank_rel = tol_rank;
    tol.stab = tol_stab;
    return tol;
  }
};

void add_tol_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--tol-rank", flags.tol_rank, "relative rank tolerance")->capture_default_str();
  cmd->add_option("--tol-stab", flags.tol_stab, "stability margin tolerance")->capture_default_str();
}

int run_check(const std::string& path, const std::string& method, const CommonFlags& flags) {
  const Tolerances tol = flags.tolerances();
  const DescriptorSystem sys = load_system(path);
  validate(sys, tol);

  std::optional<SpectralReport> sp;
  std::optional<FrequencyReport> fr;
  if (method == "spectral" || method == "both") sp = spectral_sprifiability(sys, tol);
  if (method == "frequency" || method == "both") fr = frequency_sprifiability(sys, tol);

  std::vector<std::string> reasons;
  if (sp)
    for (const std::string& r : sp->reasons) reasons.push_back("spectral: " + r);
  if (fr)
    for (const std::string& r : fr->reasons) reasons.push_back("frequency: " + r);

  bool verdict = false;
  if (method == "spectral") {
    verdict = sp->sprifiable;
  } else if (method == "frequency") {
    verdict = fr->sprifiable;
  } else {
    if (!sp->rank_conditions_hold) {
      reasons.push_back(
          "rank conditions fail, so the spectral test is sufficient only; the frequency verdict is used");
      verdict = fr->sprifiable;
    } else if (sp->sprifiable != fr->sprifiable) {
      std::fprintf(stderr,
                   "error: spectral and frequency methods disagree (spectral: %s, frequency: %s)\n",
                   sp->sprifiable ? "SPRifiable" : "not SPRifiable",
                   fr->sprifiable ? "SPRifiable" : "not SPRifiable");
      for (const std::string& r : reasons) std::fprintf(stderr, "  - %s\n", r.c_str());
      return kExitError;
    } else {
      verdict = sp->sprifiable;
    }
  }

  if (flags.as_json) {
    json out{{"verdict", verdict}, {"method", method}};
    if (sp) {
      out["eigenvalues"] = complex_list_json(sp->eigenvalues);
      if (sp->zero_index) out["zero_index"] = *sp->zero_index;
      out["rank_conditions_hold"] = sp->rank_conditions_hold;
    }
    if (fr) {
      out["ginv_infinity_order"] = fr->ginv_infinity_order;
      json cls = json::array();
      for (const ClassifiedEig& ce : fr->pencil_eigs)
        cls.push_back(json{{"value", complex_to_json(ce.value)}, {"label", to_string(ce.label)}});
      out["classification"] = cls;
      if (!sp) {
        std::vector<Complex> eigs;
        for (const ClassifiedEig& ce : fr->pencil_eigs) eigs.push_back(ce.value);
        out["eigenvalues"] = complex_list_json(eigs);
      }
    }
    out["reasons"] = reasons;
    emit_json(out);
  } else {
    std::printf("verdict: %s\n", verdict_word(verdict).c_str());
    if (sp) {
      std::printf("[spectral]\n");
      std::printf("  eigenvalues: %s\n", complex_list_str(sp->eigenvalues).c_str());
      if (sp->zero_index) std::printf("  zero eigenvalue index: %lld\n", static_cast<long long>(*sp->zero_index));
      std::printf("  rank conditions: %s\n", sp->rank_conditions_hold ? "hold" : "fail");
    }
    if (fr) {
      std::printf("[frequency]\n");
      std::printf("  pencil eigenvalues:\n");
      if (fr->pencil_eigs.empty()) std::printf("    (none)\n");
      for (const ClassifiedEig& ce : fr->pencil_eigs)
        std::printf("    %s (%s)\n", format_complex(ce.value).c_str(), to_string(ce.label));
      std::printf("  infinity order of the inverse response: %lld\n",
                  static_cast<long long>(fr->ginv_infinity_order));
    }
    print_reasons(reasons);
  }
  return verdict ? kExitYes : kExitNo;
}

int run_synth(const std::string& path, std::optional<double> q_scale, const std::string& out_path,
              const CommonFlags& flags) {
  const Tolerances tol = flags.tolerances();
  const DescriptorSystem sys = load_system(path);
  validate(sys, tol);

  SynthesisOptions opts;
  opts.q_scale = q_scale;
  const SynthesisResult res = synthesize(sys, opts, tol);

  if (!res.feasible) {
    if (flags.as_json) {
      emit_json(json{{"verdict", false}, {"feasible", false}, {"reason", res.infeasible_reason}});
    } else {
      std::printf("verdict: %s\n", verdict_word(false).c_str());
      std::printf("infeasible: %s\n", res.infeasible_reason.c_str());
    }
    return kExitNo;
  }

  json ctrl = controller_to_json(*res.gains, *res.decomposition);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) fail(ErrorCode::invalid_input, "cannot write " + out_path);
    out << ctrl.dump(2) << '\n';
    if (flags.as_json) {
      json summary{{"verdict", true},
                   {"feasible", true},
                   {"K", ctrl["K"]},
                   {"L", ctrl["L"]},
                   {"out", out_path},
                   {"notes", res.notes}};
      emit_json(summary);
    } else {
      std::printf("verdict: %s\n", verdict_word(true).c_str());
      std::printf("controller written to %s\n", out_path.c_str());
      print_reasons(res.notes);
    }
  } else {
    if (flags.as_json) {
      ctrl["verdict"] = true;
      ctrl["feasible"] = true;
      ctrl["notes"] = res.notes;
    }
    emit_json(ctrl);
  }
  return kExitYes;
}

int run_verify(const std::string& sys_path, const std::string& ctrl_path, int grid_points, double omega_max,
               const CommonFlags& flags) {
  const Tolerances tol = flags.tolerances();
  const DescriptorSystem sys = load_system(sys_path);
  validate(sys, tol);
  const ControllerData ctrl = load_controller(ctrl_path);

  const FrequencyGrid grid = FrequencyGrid::standard(static_cast<std::size_t>(grid_points), 1e-6, omega_max);
  const VerificationReport rep = verify_closed_loop(sys, ctrl.K, ctrl.L, grid, tol);
  const std::vector<std::string> findings =
      spr_structural_checks(closed_loop_system(rep.loop), rep.certificate, tol);

  const bool pass = rep.certificate.pass;
  if (flags.as_json) {
    const SprCertificate& c = rep.certificate;
    json out{{"verdict", pass},
             {"stable", rep.stable},
             {"closed_loop_eigenvalues", complex_list_json(rep.closed_loop_eigenvalues)},
             {"certificate",
              json{{"epsilon", c.epsilon},
                   {"pole_margin", c.pole_margin},
                   {"min_hermitian_eig", c.min_hermitian_eig},
                   {"worst_omega", c.worst_omega},
                   {"grid_points", c.grid_points},
                   {"includes_limit", c.includes_limit},
                   {"caveat", c.caveat},
                   {"reasons", c.reasons}}},
             {"structural_findings", findings}};
    emit_json(out);
  } else {
    std::printf("closed-loop eigenvalues: %s\n", complex_list_str(rep.closed_loop_eigenvalues).c_str());
    std::printf("stable: %s\n", rep.stable ? "yes" : "no");
    std::printf("certificate: %s\n", pass ? paint("PASS", "32").c_str() : paint("FAIL", "31").c_str());
    std::printf("  min Hermitian eigenvalue: %.15g at omega = %.15g\n", rep.certificate.min_hermitian_eig,
                rep.certificate.worst_omega);
    std::printf("  pole margin: %.15g\n", rep.certificate.pole_margin);
    std::printf("  epsilon: %.15g\n", rep.certificate.epsilon);
    std::printf("  grid points: %zu%s\n", rep.certificate.grid_points,
                rep.certificate.includes_limit ? " (large-omega limit included)" : "");
    std::printf("  caveat: %s\n", rep.certificate.caveat.c_str());
    print_reasons(rep.certificate.reasons);
    if (!findings.empty()) {
      std::printf("structural findings:\n");
      for (const std::string& f : findings) std::printf("  - %s\n", f.c_str());
    }
  }
  return pass ? kExitYes : kExitNo;
}

int run_eval(const std::string& path, const std::string& s_text, bool inverse) {
  const Tolerances tol;
  const DescriptorSystem sys = load_system(path);
  validate(sys, tol);
  const Complex s = parse_complex(s_text);
  CMatrix value;
  try {
    value = inverse ? eval_G_inverse(sys, s, tol) : eval_G(sys, s, tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::pole_evaluation) {
      std::printf("pole near s = %s\n", format_complex(s).c_str());
      return kExitNo;
    }
    throw;
  }
  for (Index i = 0; i < value.rows(); ++i) {
    for (Index j = 0; j < value.cols(); ++j)
      std::printf("%s%s", j ? "  " : "", format_complex(value(i, j), 15).c_str());
    std::printf("\n");
  }
  return kExitYes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPR feasibility and static output feedback synthesis for linear descriptor systems"};
  app.require_subcommand(1);

  std::string sys_path, ctrl_path, out_path, s_text;
  std::string method = "both";
  double q_scale = 1.0;
  int grid_points = 481;
  double omega_max = 1e6;
  bool inverse = false;
  CommonFlags check_flags, synth_flags, verify_flags;

  CLI::App* check_cmd = app.add_subcommand("check", "decide SPRifiability of a system file");
  check_cmd->add_option("system", sys_path, "system JSON file")->required();
  check_cmd->add_option("--method", method, "spectral, frequency, or both")
      ->check(CLI::IsMember({"spectral", "frequency", "both"}))
      ->capture_default_str();
  add_tol_flags(check_cmd, check_flags);
  check_cmd->add_flag("--json", check_flags.as_json, "machine-readable output");

  CLI::App* synth_cmd = app.add_subcommand("synth", "synthesize feedback gains K and L");
  synth_cmd->add_option("system", sys_path, "system JSON file")->required();
  CLI::Option* q_opt =
      synth_cmd->add_option("--q-scale", q_scale, "use Q = q.I instead of Q = I in the Lyapunov step");
  synth_cmd->add_option("--out", out_path, "write the controller file here instead of stdout");
  add_tol_flags(synth_cmd, synth_flags);
  synth_cmd->add_flag("--json", synth_flags.as_json, "machine-readable output");

  CLI::App* verify_cmd = app.add_subcommand("verify", "verify a controller against a system");
  verify_cmd->add_option("system", sys_path, "system JSON file")->required();
  verify_cmd->add_option("controller", ctrl_path, "controller JSON file")->required();
  verify_cmd->add_option("--grid-points", grid_points, "log-spaced frequency samples")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  verify_cmd->add_option("--omega-max", omega_max, "top of the frequency sweep")->capture_default_str();
  add_tol_flags(verify_cmd, verify_flags);
  verify_cmd->add_flag("--json", verify_flags.as_json, "machine-readable output");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate the transfer response at one complex point");
  eval_cmd->add_option("system", sys_path, "system JSON file")->required();
  eval_cmd->add_option("--s", s_text, "evaluation point, e.g. \"0.5-2i\"")->required();
  eval_cmd->add_flag("--inverse", inverse, "evaluate the inverse response instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitYes : kExitError;
  }

  try {
    if (check_cmd->parsed()) return run_check(sys_path, method, check_flags);
    if (synth_cmd->parsed()) {
      std::optional<double> q;
      if (q_opt->count() > 0) q = q_scale;
      return run_synth(sys_path, q, out_path, synth_flags);
    }
    if (verify_cmd->parsed()) return run_verify(sys_path, ctrl_path, grid_points, omega_max, verify_flags);
    if (eval_cmd->parsed()) return run_eval(sys_path, s_text, inverse);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
