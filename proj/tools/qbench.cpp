// qbench: command-line driver for the benchmark harness.
//
//   qbench prepare data.csv --label Outcome --positive 1 --seed 0 --out diabetes.manifest
//   qbench pca-variance --dataset diabetes.manifest
//   qbench run --dataset diabetes.manifest --features 2..6 --families qnn,qsvm,classical --workers 4
//   qbench report --store records.jsonl --out reports/
//   qbench verify

#include "qbench/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

namespace {

using namespace qbench;

std::vector<int> parse_feature_counts(const std::string& s) {
    std::vector<int> out;
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        const auto lo = parse_int(s.substr(0, dots), "--features");
        const auto hi = parse_int(s.substr(dots + 2), "--features");
        if (lo < 1 || hi < lo) throw UsageError("--features: bad range '" + s + "'");
        for (auto k = lo; k <= hi; ++k) out.push_back(static_cast<int>(k));
        return out;
    }
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        const auto k = parse_int(trim(item), "--features");
        if (k < 1) throw UsageError("--features: counts must be >= 1");
        out.push_back(static_cast<int>(k));
    }
    if (out.empty()) throw UsageError("--features: empty list");
    return out;
}

std::string comma_to_space(std::string s) {
    std::replace(s.begin(), s.end(), ',', ' ');
    return s;
}

KeyValueDoc read_config(const std::string& path) { return path.empty() ? KeyValueDoc{} : KeyValueDoc::load(path); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum vs classical classifier benchmark harness"};
    app.require_subcommand(1);

    // prepare
    auto* prep = app.add_subcommand("prepare", "Split a CSV and write a manifest with the fitted preprocessing");
    std::string prep_csv, prep_label, prep_positive, prep_out, prep_name, prep_drop, prep_scaler = "standard";
    std::uint64_t prep_seed = 0;
    prep->add_option("csv", prep_csv, "Input CSV")->required()->check(CLI::ExistingFile);
    prep->add_option("--label", prep_label, "Label column")->required();
    prep->add_option("--positive", prep_positive, "Label value of the positive class")->required();
    prep->add_option("--seed", prep_seed, "Split seed");
    prep->add_option("--drop", prep_drop, "Comma-separated columns to ignore");
    prep->add_option("--name", prep_name, "Dataset name (default: file stem)");
    prep->add_option("--scaler", prep_scaler, "standard or minmax")->check(CLI::IsMember({"standard", "minmax"}));
    prep->add_option("--out", prep_out, "Manifest path")->required();

    // pca-variance
    auto* pca = app.add_subcommand("pca-variance", "Cumulative explained-variance ratio per component");
    std::string pca_manifest, pca_out;
    bool pca_train_only = false;
    pca->add_option("--dataset", pca_manifest, "Manifest from `prepare`")->required()->check(CLI::ExistingFile);
    pca->add_option("--out", pca_out, "Also write the curve as CSV");
    pca->add_flag("--train-only", pca_train_only, "Use the fitted train-split PCA instead of the full dataset");

    // run
    auto* run = app.add_subcommand("run", "Run the model grid and append records to the store");
    std::string run_manifest, run_features = "2..6", run_families, run_store = "records.jsonl", run_config;
    unsigned run_workers = 0;
    std::optional<std::uint64_t> run_seed;
    run->add_option("--dataset", run_manifest, "Manifest from `prepare`")->required()->check(CLI::ExistingFile);
    run->add_option("--features", run_features, "Feature counts, e.g. 2..6 or 2,4");
    run->add_option("--families", run_families, "Comma-separated subset of qnn,qsvm,classical");
    run->add_option("--workers", run_workers, "Concurrent grid cells (default: config or hardware)");
    run->add_option("--seed", run_seed, "Master seed (overrides config)");
    run->add_option("--store", run_store, "Record store (JSON lines, appended)");
    run->add_option("--config", run_config, "Key-value config file")->check(CLI::ExistingFile);

    // report
    auto* rep = app.add_subcommand("report", "Write result tables from a record store");
    std::string rep_store = "records.jsonl", rep_out, rep_config;
    std::vector<std::string> rep_manifests;
    rep->add_option("--store", rep_store, "Record store")->check(CLI::ExistingFile);
    rep->add_option("--out", rep_out, "Output directory")->required();
    rep->add_option("--config", rep_config, "Key-value config file (selection thresholds)")->check(CLI::ExistingFile);
    rep->add_option("--manifest", rep_manifests, "Manifests whose PCA curves to include")->check(CLI::ExistingFile);

    // verify
    auto* ver = app.add_subcommand("verify", "Run the acceptance suite");
    std::vector<int> ver_ids;
    std::string ver_data, ver_scratch;
    ver->add_option("--criteria", ver_ids, "Criterion ids (default: all)")->delimiter(',');
    ver->add_option("--data-dir", ver_data, "Directory with the dataset CSVs (default: $QBENCH_DATA_DIR or data/)");
    ver->add_option("--scratch", ver_scratch, "Working directory for temporary files");

    // default-config
    auto* defcfg = app.add_subcommand("default-config", "Print the default configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prep) {
            std::vector<std::string> drop = split_words(comma_to_space(prep_drop));
            const auto csv = std::filesystem::absolute(prep_csv).string();
            Dataset ds = load_csv(csv, prep_label, prep_positive, drop);
            ds.name = prep_name.empty() ? std::filesystem::path(prep_csv).stem().string() : prep_name;
            const auto kind = prep_scaler == "minmax" ? ScalerKind::MinMax : ScalerKind::Standard;
            const SplitBundle b = SplitBundle::make(ds, prep_seed, kind);
            to_manifest(ds, csv, drop, b).save(prep_out);
            std::printf("%s: %zu rows, %zu features, positive share %.4f; train/val/test = %zu/%zu/%zu\n", ds.name.c_str(),
                        ds.size(), ds.feature_names.size(), ds.positive_share(), b.indices.train.size(),
                        b.indices.validation.size(), b.indices.test.size());
        } else if (*pca) {
            const auto m = load_manifest(KeyValueDoc::load(pca_manifest));
            std::vector<double> ratio;
            if (pca_train_only) {
                ratio = m.bundle.preprocessor.pca.cumulative_ratio;
            } else {
                const auto kind = m.bundle.preprocessor.scaler.kind;
                ratio = pca_fit(Scaler::fit(m.dataset.data.X, kind).apply(m.dataset.data.X)).cumulative_ratio;
            }
            std::string csv = "component,cumulative_ratio\n";
            for (std::size_t i = 0; i < ratio.size(); ++i) {
                char line[64];
                std::snprintf(line, sizeof line, "%zu,%.4f\n", i + 1, ratio[i]);
                csv += line;
            }
            std::fputs(csv.c_str(), stdout);
            if (!pca_out.empty()) {
                std::ofstream out(pca_out);
                if (!(out << csv)) throw IoError("cannot write " + pca_out);
            }
        } else if (*run) {
            KeyValueDoc cfg = read_config(run_config);
            if (!run_families.empty()) cfg.set("families", comma_to_space(run_families));
            if (run_seed) cfg.set("seed", static_cast<unsigned long long>(*run_seed));
            if (run_workers) cfg.set("workers", static_cast<int>(run_workers));
            else if (!cfg.contains("workers")) cfg.set("workers", static_cast<int>(default_workers()));
            const GridOptions opt = grid_options_from(cfg);
            const auto m = load_manifest(KeyValueDoc::load(run_manifest));
            const auto ks = parse_feature_counts(run_features);
            RecordStore store(run_store);
            std::size_t failed = 0;
            const auto recs = run_grid(m.dataset.name, m.bundle, ks, opt, &store, [&](const ExperimentRecord& r) {
                if (!r.ok()) ++failed;
                std::fprintf(stderr, "%-9s k=%d %-18s %-40s val F1 %.4f%s\n", r.family.c_str(), r.n_features,
                             r.model.c_str(), r.config_string().c_str(), r.at(SplitName::Validation).f1(),
                             r.ok() ? "" : (" ERROR: " + r.error).c_str());
            });
            std::printf("%zu cells run, %zu failed, store %s\n", recs.size(), failed, run_store.c_str());
        } else if (*rep) {
            const KeyValueDoc cfg = read_config(rep_config);
            const auto recs = RecordStore::load(rep_store);
            std::vector<PcaCurve> curves;
            std::vector<std::string> names;
            for (const auto& path : rep_manifests) {
                const auto doc = KeyValueDoc::load(path);
                curves.push_back({doc.get("dataset.name", "dataset"), doc.get_reals("pca.cumulative_ratio")});
                names.push_back(curves.back().dataset);
            }
            const auto files = emit_reports(
                recs, rep_out, [&](const std::string& ds) { return selection_policy_from(cfg, ds); }, curves, names);
            std::printf("%zu records -> %zu files in %s\n", recs.size(), files.written.size(), rep_out.c_str());
        } else if (*ver) {
            VerifyOptions o;
            if (!ver_data.empty()) o.data_dir = ver_data;
            if (!ver_scratch.empty()) o.scratch = ver_scratch;
            if (ver_ids.empty()) ver_ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
            bool all = true;
            for (int id : ver_ids) {
                const auto r = run_criterion(id, o);
                all = all && r.passed;
                std::printf("%s\n", format_result(r).c_str());
                std::fflush(stdout);
            }
            return all ? 0 : 1;
        } else if (*defcfg) {
            std::fputs(default_config().to_string().c_str(), stdout);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qbench: %s\n", e.what());
        return 2;
    }
    return 0;
}
