// End-to-end checks of the command-line front end: exit codes, JSON schema
// basics, and byte-identical output under a fixed seed.
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    std::cerr << "FAILED: " << what << '\n';
    ++failures;
  }
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

int exit_code(int status) {
#ifdef WEXITSTATUS
  return WEXITSTATUS(status);
#else
  return status;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: test_cli <bayesics-binary> <data-dir>\n";
    return 1;
  }
  const std::string bin = argv[1];
  const std::string data = argv[2];
  const std::string tmp = "cli_test_out";
  run("mkdir -p " + tmp);

  // no arguments: usage error, exit 2 (CLI11 reports its own code; accept nonzero)
  check(exit_code(run(bin + " >/dev/null 2>&1")) != 0, "no arguments exits nonzero");

  // unknown flag
  check(exit_code(run(bin + " ttest --no-such-flag >/dev/null 2>&1")) != 0,
        "unknown flag exits nonzero");

  // missing file: user error, exit 2
  check(exit_code(run(bin + " ttest --data /nonexistent.csv --formula 'age ~ rx' "
                            ">/dev/null 2>&1")) == 2,
        "missing file exits 2");

  // model error surfaces as a user error
  check(exit_code(run(bin + " ttest --data " + data +
                      "/indo_rct.csv --formula 'age ~ nosuchvar' >/dev/null 2>&1")) == 2,
        "unknown variable exits 2");

  // determinism: same seed, byte-identical reports
  const std::string a = tmp + "/a.json", b = tmp + "/b.json";
  check(exit_code(run(bin + " ttest --data " + data +
                      "/indo_rct.csv --formula 'age ~ rx' --seed 7 --out " + a)) == 0,
        "ttest runs");
  check(exit_code(run(bin + " ttest --data " + data +
                      "/indo_rct.csv --formula 'age ~ rx' --seed 7 --out " + b)) == 0,
        "ttest runs again");
  check(!slurp(a).empty() && slurp(a) == slurp(b),
        "same seed gives byte-identical JSON");

  // different seed changes sampled quantities but stays valid JSON
  const std::string c = tmp + "/c.json";
  run(bin + " ttest --data " + data +
      "/indo_rct.csv --formula 'age ~ rx' --seed 8 --out " + c);
  check(slurp(a) != slurp(c), "different seed changes the report");

  // schema spot checks
  {
    const auto j = nlohmann::ordered_json::parse(slurp(a));
    check(j["schema_version"] == "1", "schema version present");
    check(j["config"]["seed"] == 7, "config echoes the seed");
    check(j["ttest"]["anova"]["pairwise_differences"].size() == 1,
          "pairwise difference present");
    check(j["ttest"]["anova"]["sample_plans"].size() > 0,
          "sample plans recorded whenever sampling occurred");
    check(j["n"] == 602, "indo_rct fixture has 602 usable rows");
  }

  // mcplan: direct formula evaluation
  {
    const std::string p = tmp + "/plan.json";
    check(exit_code(run(bin + " mcplan --alpha 0.05 --s 0.95 --epsilon 0.1 "
                              "--density 0.058440 --variance 1 --out " + p)) == 0,
          "mcplan runs");
    const auto j = nlohmann::ordered_json::parse(slurp(p));
    check(j["L"] == 2742, "mcplan L = 2742");
    check(j["M"] == 385, "mcplan M = 385");
  }

  // env-var seed override
  {
    const std::string d = tmp + "/d.json";
    run("BAYESICS_SEED=7 " + bin + " ttest --data " + data +
        "/indo_rct.csv --formula 'age ~ rx' --seed 99 --out " + d);
    check(slurp(d) == slurp(a), "BAYESICS_SEED overrides --seed");
  }

  // a sampling-based subcommand is deterministic end to end too
  {
    const std::string e1 = tmp + "/e1.json", e2 = tmp + "/e2.json";
    run(bin + " poisson --counts 12,20 --offsets 3,5 --seed 5 --out " + e1);
    run(bin + " poisson --counts 12,20 --offsets 3,5 --seed 5 --out " + e2);
    check(slurp(e1) == slurp(e2) && !slurp(e1).empty(),
          "poisson report byte-identical under a fixed seed");
  }

  // shipped fixture smokes across the analysis subcommands
  {
    const std::string f = tmp + "/smoke.json";
    check(exit_code(run(bin + " aov --data " + data +
                        "/indo_rct.csv --formula 'age ~ rx' --seed 2 --out " + f)) == 0,
          "aov on indo_rct");
    check(exit_code(run(bin + " aov --data " + data +
                        "/nb_sim.csv --formula 'time ~ x3' --seed 2 "
                        "--mc-epsilon 0.02 --out " + f)) == 0,
          "five-level aov on nb_sim");
    check(exit_code(run(bin + " prop --successes 9 --trials 20 --prior uniform "
                        "--out " + f)) == 0,
          "uniform-prior prop test");
    check(exit_code(run(bin + " lm --data " + data +
                        "/quad_sim.csv --formula 'y ~ x' --band x --seed 2 "
                        "--out " + f)) == 0,
          "lm with credible band");
    check(exit_code(run(bin + " glm --data " + data +
                        "/quad_sim.csv --formula 'y ~ x' --family gaussian "
                        "--method laplace --seed 2 --out " + f)) == 0,
          "gaussian-family glm");
    // the --rope override lands in the report verbatim
    check(exit_code(run(bin + " ttest --data " + data +
                        "/indo_rct.csv --formula 'age ~ rx' --seed 2 "
                        "--rope '-2,2' --out " + f)) == 0,
          "ttest with rope override");
    {
      const auto j = nlohmann::ordered_json::parse(slurp(f));
      const auto& rb =
          j["ttest"]["anova"]["pairwise_differences"][0]["rope_bounds"];
      check(rb["lo"] == -2.0 && rb["hi"] == 2.0, "rope override respected");
    }
    check(exit_code(run(bin + " glm --data " + data +
                        "/nb_sim.csv --formula 'outcome ~ .' --family negbinom "
                        "--method laplace --seed 2 --pairs-out " + tmp +
                        "/pairs.csv --out " + f)) == 0,
          "negbinom glm on nb_sim");
    {
      std::ifstream pf(tmp + "/pairs.csv");
      std::string header;
      std::getline(pf, header);
      check(header == "t_pred,t_obs", "p-value pairs CSV written");
    }
    check(exit_code(run(bin + " npglm --data " + data +
                        "/quad_sim.csv --formula 'y ~ x' --family gaussian "
                        "--seed 2 --mc-epsilon 0.2 --out " + f)) == 0,
          "npglm on quad_sim");
    check(exit_code(run(bin + " bma --data " + data +
                        "/quad_sim.csv --formula 'y ~ .' --seed 2 "
                        "--mc-epsilon 0.2 --out " + f)) == 0,
          "bma on quad_sim");
    check(exit_code(run(bin + " survfit --data " + data +
                        "/gbsg2.csv --formula 'Surv(time,cens) ~ horTh' --seed 2 "
                        "--mc-epsilon 0.02 --curve-out " + tmp + "/curves.csv --out " +
                        f)) == 0,
          "survfit on gbsg2");
    {
      std::ifstream cf(tmp + "/curves.csv");
      std::string header;
      std::getline(cf, header);
      check(header == "group,t,median,lower,upper", "curve CSV written");
    }
    check(exit_code(run(bin + " heterosced --data " + data +
                        "/indo_rct.csv --formula 'age ~ rx' --out " + f)) == 0,
          "heterosced on indo_rct");
    check(exit_code(run(bin + " elicit-beta --mean 0.3 --q-prob 0.95 "
                        "--q-value 0.6 --out " + f)) == 0,
          "elicit-beta");
    check(exit_code(run(bin + " elicit-invgamma --response-variance 2.5 --out " +
                        f)) == 0,
          "elicit-invgamma");
    check(exit_code(run(bin + " glm --data " + data +
                        "/indo_rct.csv --formula 'outcome ~ age + rx' "
                        "--family binomial --method laplace --band age "
                        "--exemplar 'rx=1_indomethacin' --seed 2 --out " + f)) == 0,
          "glm band with exemplar");
    {
      std::ofstream mf(tmp + "/med.csv");
      mf << "t,m,y\n";
      unsigned state = 12345;
      auto nextu = [&] {
        state = state * 1103515245u + 12345u;
        return (state >> 16) / 65536.0;
      };
      for (int i = 0; i < 200; ++i) {
        const double t = i % 2;
        const double m = t + nextu() + nextu() - 1.0;
        const double yv = 2.0 * m + 0.5 * t + nextu() + nextu() - 1.0;
        mf << t << ',' << m << ',' << yv << '\n';
      }
    }
    check(exit_code(run(bin + " mediate --data " + tmp +
                        "/med.csv --mediator-formula 'm ~ t' "
                        "--outcome-formula 'y ~ t + m' --treatment t "
                        "--mc-epsilon 0.05 --seed 2 --out " + f)) == 0,
          "mediate CLI smoke");
  }

  if (failures == 0) {
    std::cout << "test_cli: all checks passed\n";
    return 0;
  }
  std::cerr << "test_cli: " << failures << " check(s) failed\n";
  return 1;
}
