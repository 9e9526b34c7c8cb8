// CLI integration checks: exit codes, file determinism, end-to-end pipeline.
// Usage: test_cli <path-to-fedsim-binary> <scratch-dir>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string g_binary;
std::string g_scratch;
int g_failures = 0;

void expect(bool ok, const std::string& what) {
  if (ok) {
    std::cout << "ok: " << what << "\n";
  } else {
    ++g_failures;
    std::cout << "FAILED: " << what << "\n";
  }
}

int run(const std::string& args, std::string* output = nullptr) {
  std::string command = g_binary + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return -1;
  std::string text;
  char buffer[4096];
  while (std::size_t n = fread(buffer, 1, sizeof(buffer), pipe)) text.append(buffer, n);
  int status = pclose(pipe);
  if (output) *output = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string p(const std::string& name) { return g_scratch + "/" + name; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: test_cli <fedsim-binary> <scratch-dir>\n";
    return 2;
  }
  g_binary = argv[1];
  g_scratch = argv[2];
  std::filesystem::create_directories(g_scratch);

  // gen-data: determinism and stats shape
  std::string out;
  int rc = run("gen-data --preset app-level --seed 7 --out " + p("a1.jsonl") + " --test-out " +
                   p("t1.jsonl"),
               &out);
  expect(rc == 0, "gen-data app-level exits 0");
  expect(out.find("\"n_episodes\": 750") != std::string::npos, "gen-data prints stats");
  rc = run("gen-data --preset app-level --seed 7 --out " + p("a2.jsonl") + " --test-out " +
           p("t2.jsonl"));
  expect(rc == 0, "gen-data rerun exits 0");
  expect(slurp(p("a1.jsonl")) == slurp(p("a2.jsonl")), "gen-data is byte-identical per seed");
  expect(slurp(p("t1.jsonl")) == slurp(p("t2.jsonl")), "test split is byte-identical per seed");

  rc = run("gen-data --apps Amazon:1 --episodes 0 --out " + p("bad.jsonl"), &out);
  expect(rc == 2, "gen-data --episodes 0 exits 2");
  expect(out.find("InvalidSpec") != std::string::npos, "gen-data error names InvalidSpec");

  // category-level preset shape through the CLI
  rc = run("gen-data --preset category-level --seed 1 --out " + p("cat.jsonl"), &out);
  expect(rc == 0, "gen-data category-level exits 0");
  expect(out.find("\"n_episodes\": 1000") != std::string::npos, "category-level has 1000 episodes");
  expect(out.find("\"n_apps\": 52") != std::string::npos, "category-level has 52 apps");
  expect(out.find("\"n_steps\": 7127") != std::string::npos, "category-level has 7127 steps");

  // partition: diagonal heatmap, determinism, infeasible scheme
  rc = run("partition --data " + p("a1.jsonl") + " --scheme app-level/skew --clients 5 --seed 3" +
               " --out " + p("skew.tsv") + " --heatmap " + p("skew.csv"),
           &out);
  expect(rc == 0, "partition app-level/skew exits 0");
  std::string heatmap = slurp(p("skew.csv"));
  expect(heatmap.find("client,Amazon,Clock,Ebay,Flipkart,Gmail") == 0, "heatmap header labels");
  expect(heatmap.find("0,150,0,0,0,0") != std::string::npos, "diagonal row 0");
  expect(heatmap.find("4,0,0,0,0,150") != std::string::npos, "diagonal row 4");

  rc = run("partition --data " + p("a1.jsonl") + " --scheme app-level/skew --clients 5 --seed 3" +
           " --out " + p("skew2.tsv"));
  expect(rc == 0 && slurp(p("skew.tsv")) == slurp(p("skew2.tsv")),
         "partition rerun is byte-identical");

  rc = run("partition --data " + p("cat.jsonl") +
               " --scheme category-level/skew --clients 7 --out " + p("never.tsv"),
           &out);
  expect(rc == 3, "infeasible scheme exits 3");
  expect(out.find("InfeasibleScheme") != std::string::npos, "error names InfeasibleScheme");

  // train: fedprox mu=0 reduction, zero_shot, unknown algorithm
  std::string common = " --data " + p("a1.jsonl") + " --assign " + p("iid.tsv") + " --test " +
                       p("t1.jsonl") + " --rounds 4 --clients-per-round 3 --seed 11" +
                       " --feature-dim 32 --arg-vocab 16";
  rc = run("partition --data " + p("a1.jsonl") + " --scheme app-level/iid --clients 5 --out " +
           p("iid.tsv"));
  expect(rc == 0, "partition app-level/iid exits 0");

  rc = run("train --algorithm fedavg" + common + " --metrics-out " + p("fedavg.jsonl"));
  expect(rc == 0, "train fedavg exits 0");
  rc = run("train --algorithm fedprox --mu 0" + common + " --metrics-out " + p("fedprox0.jsonl"));
  expect(rc == 0, "train fedprox exits 0");
  expect(slurp(p("fedavg.jsonl")) == slurp(p("fedprox0.jsonl")),
         "fedprox mu=0 metrics are identical to fedavg");

  rc = run("train --algorithm zero_shot" + common + " --metrics-out " + p("zs.jsonl"), &out);
  expect(rc == 0, "train zero_shot exits 0");
  {
    std::string metrics = slurp(p("zs.jsonl"));
    expect(metrics.find("\"round\":") == std::string::npos, "zero_shot metrics have no rounds");
    expect(metrics.find("\"summary\":true") != std::string::npos, "zero_shot metrics summarize");
  }

  rc = run("train --algorithm fedsgd" + common, &out);
  expect(rc == 2, "unknown algorithm exits 2");

  // manifest is emitted next to the metrics
  expect(slurp(p("fedavg.jsonl.manifest.json")).find("\"digest\"") != std::string::npos,
         "run manifest records input digests");

  // checkpoint + evaluate
  rc = run("train --algorithm fedavg" + common + " --metrics-out " + p("ck.jsonl") +
           " --checkpoint-out " + p("state.ckpt"));
  expect(rc == 0, "train with checkpoint exits 0");
  rc = run("evaluate --checkpoint " + p("state.ckpt") + " --test " + p("t1.jsonl"), &out);
  expect(rc == 0, "evaluate exits 0");
  expect(out.find("step_accuracy") != std::string::npos, "evaluate prints a report");

  // report: stable table from two runs
  rc = run("report --by app --out " + p("table.csv") + " " + p("fedavg.jsonl") + " " +
               p("fedprox0.jsonl"),
           &out);
  expect(rc == 0, "report exits 0");
  std::string table = slurp(p("table.csv"));
  expect(table.rfind("run,Amazon,Clock,Ebay,Flipkart,Gmail,Avg.", 0) == 0,
         "report header mirrors the app columns");
  expect(table.find("\nfedavg,") != std::string::npos, "report row per run, sorted by name");

  rc = run("report", &out);
  expect(rc == 2, "report with no inputs exits 2");
  expect(out.find("MissingMetrics") != std::string::npos, "error names MissingMetrics");

  // stats round-trips the file
  rc = run("stats --data " + p("a1.jsonl"), &out);
  expect(rc == 0, "stats exits 0");
  expect(out.find("\"n_episodes\": 750") != std::string::npos, "stats reads the dataset back");

  // per-step results CSV
  rc = run("evaluate --checkpoint " + p("state.ckpt") + " --test " + p("t1.jsonl") +
               " --steps-csv " + p("steps.csv"),
           &out);
  expect(rc == 0, "evaluate --steps-csv exits 0");
  {
    std::string csv = slurp(p("steps.csv"));
    expect(csv.rfind("episode_id,step_index,predicted,gold,similarity,correct", 0) == 0,
           "steps csv header");
    expect(csv.find("te-0000") != std::string::npos, "steps csv rows reference test episodes");
  }

  // config file merges under explicit flags (flags win)
  {
    std::ofstream cfg(p("train.cfg"));
    cfg << "algorithm=fedavg\nrounds=2\nseed=11\nfeature-dim=32\narg-vocab=16\n";
  }
  rc = run("train --config " + p("train.cfg") + " --data " + p("a1.jsonl") + " --assign " +
               p("iid.tsv") + " --test " + p("t1.jsonl") + " --rounds 4 --clients-per-round 3" +
               " --metrics-out " + p("cfgrun.jsonl"),
           &out);
  expect(rc == 0, "train --config exits 0");
  {
    std::string manifest = slurp(p("cfgrun.jsonl.manifest.json"));
    expect(manifest.find("\"rounds\": 4") != std::string::npos,
           "explicit --rounds wins over the config file");
    expect(manifest.find("\"seed\": 11") != std::string::npos, "config-file seed applies");
  }
  expect(slurp(p("cfgrun.jsonl")) == slurp(p("fedavg.jsonl")),
         "config-file run equals the flag-only run");

  // flags reach the experiment config through the manifest
  rc = run("train --algorithm fedavg" + common + " --low-level --eval-each-round" +
           " --metrics-out " + p("lowlevel.jsonl"));
  expect(rc == 0, "train --low-level exits 0");
  {
    std::string manifest = slurp(p("lowlevel.jsonl.manifest.json"));
    expect(manifest.find("\"low_level\": true") != std::string::npos,
           "manifest records low_level");
    expect(manifest.find("\"eval_each_round\": true") != std::string::npos,
           "manifest records eval_each_round");
    std::string metrics = slurp(p("lowlevel.jsonl"));
    expect(metrics.find("\"eval\":") != std::string::npos, "per-round eval lands in metrics");
  }

  // I/O failures exit 4
  rc = run("train --algorithm fedavg --data " + p("missing.jsonl") + " --assign " + p("iid.tsv") +
               " --test " + p("t1.jsonl"),
           &out);
  expect(rc == 4, "missing input file exits 4");
  rc = run("evaluate --checkpoint " + p("a1.jsonl") + " --test " + p("t1.jsonl"), &out);
  expect(rc == 4, "loading a non-checkpoint exits 4");
  expect(out.find("CorruptCheckpoint") != std::string::npos, "error names CorruptCheckpoint");

  // category-axis report keeps the canonical column order
  rc = run("report --by category --out " + p("cat_table.csv") + " " + p("fedavg.jsonl"), &out);
  expect(rc == 0, "report --by category exits 0");
  expect(slurp(p("cat_table.csv")).rfind("run,Shopping,Office", 0) == 0,
         "category columns in canonical order");

  // full pipeline determinism across reruns and thread counts; each run uses
  // its own directory with identical file names so outputs compare byte-wise
  auto pipeline = [&](const std::string& tag, int threads) {
    std::string dir = p("pipe_" + tag);
    std::filesystem::create_directories(dir);
    int code = 0;
    code |= run("gen-data --preset app-level --seed 5 --out " + dir + "/data.jsonl" +
                " --test-out " + dir + "/test.jsonl");
    code |= run("partition --data " + dir + "/data.jsonl" +
                " --scheme app-level/iid --clients 5 --seed 5 --out " + dir + "/assign.tsv");
    code |= run("train --algorithm fedavg --data " + dir + "/data.jsonl --assign " + dir +
                "/assign.tsv --test " + dir + "/test.jsonl" +
                " --rounds 3 --seed 5 --feature-dim 32 --arg-vocab 16 --threads " +
                std::to_string(threads) + " --metrics-out " + dir + "/metrics.jsonl");
    code |= run("report --out " + dir + "/table.csv " + dir + "/metrics.jsonl");
    return code;
  };
  expect(pipeline("r1", 1) == 0, "pipeline run 1");
  expect(pipeline("r2", 1) == 0, "pipeline run 2");
  expect(pipeline("r4", 4) == 0, "pipeline run with 4 threads");
  expect(slurp(p("pipe_r1/metrics.jsonl")) == slurp(p("pipe_r2/metrics.jsonl")),
         "pipeline metrics reproducible");
  expect(slurp(p("pipe_r1/metrics.jsonl")) == slurp(p("pipe_r4/metrics.jsonl")),
         "pipeline metrics independent of threads");
  expect(slurp(p("pipe_r1/table.csv")) == slurp(p("pipe_r4/table.csv")),
         "report files identical");

  if (g_failures != 0) {
    std::cout << g_failures << " check(s) failed\n";
    return 1;
  }
  std::cout << "all cli checks passed\n";
  return 0;
}
