#include "qbench/bench.hpp"
#include "qbench/verify.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace qbench;

namespace {

ExperimentRecord make_record(std::string family, std::string model, int k, Metrics train, Metrics val, Metrics test,
                             long long params, std::map<std::string, std::string> cfg = {}) {
    ExperimentRecord r;
    r.dataset = "toy";
    r.family = std::move(family);
    r.model = std::move(model);
    r.n_features = k;
    r.metrics = {train, val, test};
    r.n_params = params;
    r.config = std::move(cfg);
    return r;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string c;
        std::istringstream is(line);
        while (std::getline(is, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

SelectionPolicy policy(double t) {
    SelectionPolicy p;
    p.train_f1_threshold = t;
    return p;
}

GridOptions tiny_grid(unsigned workers) {
    GridOptions g = criteria::determinism_grid(workers, 17);
    g.qnn_sequences = {{Axis::Y}};
    g.qnn_ansatz = {Ansatz::Basic};
    g.qnn_reupload = {false};
    g.qnn_train.epochs = 3;
    g.qnn_growth.max_layers = 2;
    g.qsvm_encodings = {EncodingKind::Angle, EncodingKind::ZZVariantA};
    g.qsvm_reps = {1};
    return g;
}

}  // namespace

TEST(Metrics, HandComputed) {
    const Metrics m{3, 1, 2, 4};
    EXPECT_DOUBLE_EQ(m.precision(), 0.75);
    EXPECT_DOUBLE_EQ(m.recall(), 0.6);
    EXPECT_DOUBLE_EQ(m.f1(), 2 * 0.75 * 0.6 / 1.35);
    EXPECT_EQ((Metrics{0, 0, 5, 5}.precision()), 0.0);
    EXPECT_EQ((Metrics{0, 0, 5, 5}.f1()), 0.0);
    const std::vector<int> truth{1, 0, 1, 1, 0}, pred{1, 1, 0, 1, 0};
    EXPECT_EQ(confusion(truth, pred), (Metrics{2, 1, 1, 1}));
}

TEST(MetricsProperty, F1SymmetricAndStoredValuesExact) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        const Metrics m{static_cast<long long>(rng() % 50), static_cast<long long>(rng() % 50),
                        static_cast<long long>(rng() % 50), static_cast<long long>(rng() % 50)};
        EXPECT_EQ(f1(m.precision(), m.recall()), f1(m.recall(), m.precision()));
        const auto j = nlohmann::json::parse(metrics_json(m).dump());
        const Metrics back{j["tp"], j["fp"], j["fn"], j["tn"]};
        EXPECT_EQ(back.precision(), j["precision"].get<double>());
        EXPECT_EQ(back.recall(), j["recall"].get<double>());
        EXPECT_EQ(back.f1(), j["f1"].get<double>());
    }
}

TEST(Record, JsonRoundTrip) {
    auto r = make_record("qnn", "QNN", 3, {5, 1, 2, 10}, {2, 2, 1, 4}, {3, 0, 1, 6}, 18,
                         {{"encoding", "YX"}, {"ansatz", "basic"}, {"reupload", "True"}});
    r.layers = 4;
    r.layer_losses = {{2, 0.5}, {3, 0.4}};
    r.split_seed = 9;
    const auto back = record_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back.key(), r.key());
    EXPECT_EQ(back.metrics, r.metrics);
    EXPECT_EQ(back.layer_losses, r.layer_losses);
    EXPECT_EQ(back.layers, 4);
    EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
}

TEST(Selection, FiltersOnlyConfiguredFamilies) {
    const std::vector<ExperimentRecord> recs{
        make_record("qnn", "QNN", 2, {1, 9, 9, 1}, {9, 0, 0, 9}, {}, 4),        // val F1 1, train F1 low
        make_record("qnn", "QNN", 2, {9, 1, 1, 9}, {5, 2, 2, 5}, {}, 4, {{"a", "1"}}),
        make_record("qsvm", "QSVM", 2, {1, 9, 9, 1}, {9, 1, 0, 9}, {}, 3),
    };
    const auto q = select_best({recs[0], recs[1]}, policy(0.5));
    ASSERT_TRUE(q);
    EXPECT_EQ(q->config_string(), "a=1");
    const auto s = select_best({recs[2]}, policy(0.9));
    ASSERT_TRUE(s);  // qsvm not filtered by default
    SelectionPolicy all = policy(0.9);
    all.filtered_families.insert("qsvm");
    EXPECT_FALSE(select_best({recs[2]}, all));
}

TEST(Selection, TiesPreferFewerParametersThenConfigOrder) {
    const Metrics good{5, 1, 1, 5};
    const std::vector<ExperimentRecord> recs{
        make_record("classical", "svm", 2, good, good, {}, 10, {{"kernel", "rbf"}}),
        make_record("classical", "svm", 2, good, good, {}, 7, {{"kernel", "sigmoid"}}),
        make_record("classical", "svm", 2, good, good, {}, 7, {{"kernel", "linear"}}),
    };
    EXPECT_EQ(select_best(recs, policy(0))->config.at("kernel"), "linear");
}

TEST(Selection, SkipsFailedCells) {
    auto bad = make_record("qnn", "QNN", 2, {9, 0, 0, 9}, {9, 0, 0, 9}, {}, 1);
    bad.error = "boom";
    EXPECT_FALSE(select_best({bad}, policy(0)));
}

TEST(SelectionProperty, RaisingThresholdOnlyRemovesWinner) {
    std::mt19937_64 rng(4);
    auto rnd = [&] {
        return Metrics{static_cast<long long>(rng() % 10), static_cast<long long>(rng() % 10),
                       static_cast<long long>(rng() % 10), static_cast<long long>(rng() % 10)};
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ExperimentRecord> recs;
        for (int i = 0; i < 12; ++i)
            recs.push_back(make_record("qnn", "QNN", 2, rnd(), rnd(), rnd(), static_cast<long long>(rng() % 5),
                                       {{"id", std::to_string(i)}}));
        std::optional<ExperimentRecord> prev = select_best(recs, policy(0.0));
        std::size_t prev_survivors = recs.size();
        for (double t = 0.05; t <= 1.0; t += 0.05) {
            const auto cur = select_best(recs, policy(t));
            std::size_t survivors = 0;
            for (const auto& r : recs) survivors += r.at(SplitName::Train).f1() >= t;
            EXPECT_LE(survivors, prev_survivors);
            if (prev && prev->at(SplitName::Train).f1() >= t) {
                ASSERT_TRUE(cur);
                EXPECT_EQ(cur->key(), prev->key());
            }
            prev = cur;
            prev_survivors = survivors;
        }
    }
}

TEST(Config, DefaultsCoverAllOptions) {
    const KeyValueDoc def = default_config();
    const GridOptions o = grid_options_from(def);
    const GridOptions ref;
    EXPECT_EQ(o.families, ref.families);
    EXPECT_EQ(o.qnn_sequences.size(), 15u);
    EXPECT_EQ(o.qnn_train.learning_rate, ref.qnn_train.learning_rate);
    EXPECT_EQ(o.qnn_train.batch_size, 32);
    EXPECT_EQ(o.qsvm_reps, ref.qsvm_reps);
    EXPECT_EQ(o.svm_kernels, ref.svm_kernels);
    EXPECT_EQ(o.forest.n_trees, 100);
    // a parsed empty document falls back to the same values
    EXPECT_EQ(grid_options_from(KeyValueDoc{}).qsvm_encodings, o.qsvm_encodings);
    EXPECT_DOUBLE_EQ(selection_policy_from(def, "diabetes").train_f1_threshold, 0.65);
    EXPECT_DOUBLE_EQ(selection_policy_from(def, "heart_failure").train_f1_threshold, 0.50);
    EXPECT_DOUBLE_EQ(selection_policy_from(def, "prostate").train_f1_threshold, 0.75);
}

TEST(Config, RejectsBadValues) {
    KeyValueDoc d;
    d.set("families", "qnn quantum");
    EXPECT_THROW(grid_options_from(d), ConfigError);
    d = {};
    d.set("qsvm.reps", "0");
    EXPECT_THROW(grid_options_from(d), ConfigError);
    d = {};
    d.set("svm.C", "-1");
    EXPECT_THROW(grid_options_from(d), ConfigError);
    d = {};
    d.set("qnn.sequences", "XYX");
    EXPECT_THROW(grid_options_from(d), ConfigError);
}

TEST(Grid, CellEnumeration) {
    const GridOptions o;
    const auto cells = enumerate_cells(3, o);
    std::map<std::string, int> per_family;
    for (const auto& c : cells) ++per_family[c.family];
    EXPECT_EQ(per_family["qnn"], 60);
    EXPECT_EQ(per_family["qsvm"], 12);
    EXPECT_EQ(per_family["classical"], 7);
    // ZZ maps need two qubits
    std::size_t qsvm1 = 0;
    for (const auto& c : enumerate_cells(1, o)) qsvm1 += c.family == "qsvm";
    EXPECT_EQ(qsvm1, 6u);
}

TEST(Grid, DeterministicAcrossWorkerCounts) {
    const Dataset ds = synthetic_dataset(70, 3, 0.35, 5);
    const SplitBundle b = SplitBundle::make(ds, 1);
    const int ks[] = {2};
    const auto a = run_grid("toy", b, ks, tiny_grid(1));
    const auto c = run_grid("toy", b, ks, tiny_grid(3));
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i].ok()) << a[i].key() << ": " << a[i].error;
        EXPECT_EQ(to_json(a[i]).dump(), to_json(c[i]).dump());
    }
}

TEST(Grid, StoreResumesAndIsOrdered) {
    const auto dir = fresh_dir("qbench_test_store");
    const Dataset ds = synthetic_dataset(60, 3, 0.4, 6);
    const SplitBundle b = SplitBundle::make(ds, 2);
    const int ks[] = {2};
    GridOptions g = tiny_grid(2);
    g.families = {"classical"};
    {
        RecordStore store(dir / "r.jsonl");
        EXPECT_EQ(run_grid("toy", b, ks, g, &store).size(), 7u);
    }
    RecordStore again(dir / "r.jsonl");
    EXPECT_EQ(run_grid("toy", b, ks, g, &again).size(), 0u);
    const auto recs = RecordStore::load(dir / "r.jsonl");
    ASSERT_EQ(recs.size(), 7u);
    EXPECT_EQ(recs[0].model, "LogisticRegression");
    EXPECT_EQ(recs[3].model, "svm");
    EXPECT_TRUE(std::filesystem::exists(dir / "r.jsonl.timing"));
}

TEST(Grid, CellFailureIsRecordedNotFatal) {
    const Dataset ds = synthetic_dataset(60, 3, 0.4, 6);
    GridOptions g = tiny_grid(1);
    g.families = {"classical"};
    g.forest.n_trees = 0;
    const int ks[] = {2};
    const auto recs = run_grid("toy", SplitBundle::make(ds, 2), ks, g);
    ASSERT_EQ(recs.size(), 7u);
    EXPECT_EQ(recs[2].model, "RandomForest");
    EXPECT_FALSE(recs[2].ok());
    EXPECT_NE(recs[2].error.find("fit_forest"), std::string::npos);
    EXPECT_TRUE(recs[1].ok());
    EXPECT_TRUE(recs[3].ok());
}

TEST(Grid, RejectsFeatureCountBeyondPca) {
    const Dataset ds = synthetic_dataset(60, 3, 0.4, 6);
    const int ks[] = {4};
    EXPECT_THROW(run_grid("toy", SplitBundle::make(ds, 2), ks, tiny_grid(1)), UsageError);
}

TEST(Reports, EmptyRecordsGiveHeadersOnly) {
    const auto dir = fresh_dir("qbench_test_reports_empty");
    emit_reports({}, dir, [](const std::string&) { return SelectionPolicy{}; }, {}, {"toy"});
    for (const char* f : {"toy_qnn.csv", "toy_qsvm.csv", "toy_classical.csv", "toy_comparison.csv", "toy_comparison.txt"}) {
        const auto rows = read_csv(dir / f);
        EXPECT_EQ(rows.size(), 1u) << f;
    }
    EXPECT_EQ(read_csv(dir / "toy_comparison.csv")[0].size(), 7u);
}

TEST(ReportsProperty, CsvRoundTripAtFourDecimals) {
    const auto dir = fresh_dir("qbench_test_reports_rt");
    std::mt19937_64 rng(8);
    auto rnd = [&] {
        return Metrics{1 + static_cast<long long>(rng() % 30), static_cast<long long>(rng() % 30),
                       static_cast<long long>(rng() % 30), static_cast<long long>(rng() % 30)};
    };
    std::vector<ExperimentRecord> recs;
    for (int k = 2; k <= 6; ++k) {
        recs.push_back(make_record("qnn", "QNN", k, rnd(), rnd(), rnd(), 6, {{"encoding", "Y"}, {"reupload", "False"}, {"ansatz", "basic"}}));
        recs.back().layers = 3;
        recs.push_back(make_record("qsvm", "QSVM", k, rnd(), rnd(), rnd(), 9, {{"encoding", "Z"}, {"rep", "2"}, {"C", "1"}}));
        recs.push_back(make_record("classical", "RandomForest", k, rnd(), rnd(), rnd(), 90, {{"kernel", "-"}}));
    }
    std::vector<PcaCurve> pca{{"toy", {0.5, 0.8, 0.95, 1.0}}};
    emit_reports(recs, dir, [](const std::string&) { return SelectionPolicy{}; }, pca);

    auto four = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.4f", v);
        return std::string(b);
    };
    const auto qnn = read_csv(dir / "toy_qnn.csv");
    ASSERT_EQ(qnn.size(), 6u);
    for (std::size_t row = 1; row < qnn.size(); ++row) {
        const auto& r = recs[(row - 1) * 3];
        EXPECT_EQ(qnn[row][0], std::to_string(r.n_features));
        EXPECT_EQ(qnn[row][4], "3");
        for (std::size_t s = 0; s < 3; ++s) {
            EXPECT_EQ(qnn[row][5 + 2 * s], four(r.metrics[s].precision()));
            EXPECT_EQ(qnn[row][6 + 2 * s], four(r.metrics[s].recall()));
            EXPECT_EQ(four(std::stod(qnn[row][5 + 2 * s])), qnn[row][5 + 2 * s]);
        }
    }
    const auto cmp = read_csv(dir / "toy_comparison.csv");
    ASSERT_EQ(cmp.size(), 6u);
    for (const auto& row : cmp) EXPECT_EQ(row.size(), 7u);
    EXPECT_EQ(cmp[1][3], four(recs[1].at(SplitName::Test).precision()));
    EXPECT_EQ(cmp[1][6], four(recs[2].at(SplitName::Test).recall()));

    const auto txt = read_csv(dir / "toy_comparison.txt");
    EXPECT_EQ(txt[1][1].size(), 4u);  // "0.xx"

    const auto pc = read_csv(dir / "toy_pca.csv");
    ASSERT_EQ(pc.size(), 5u);
    for (std::size_t i = 2; i < pc.size(); ++i) EXPECT_GE(std::stod(pc[i][1]), std::stod(pc[i - 1][1]));
}

TEST(Reports, ByteIdenticalForSameRecords) {
    const auto a = fresh_dir("qbench_test_rep_a"), b = fresh_dir("qbench_test_rep_b");
    const std::vector<ExperimentRecord> recs{make_record("qsvm", "QSVM", 2, {3, 1, 1, 3}, {3, 1, 1, 3}, {2, 2, 1, 3}, 4,
                                                         {{"encoding", "ZZ"}, {"rep", "1"}, {"C", "1"}})};
    emit_reports(recs, a, [](const std::string&) { return SelectionPolicy{}; });
    emit_reports(recs, b, [](const std::string&) { return SelectionPolicy{}; });
    for (const auto& e : std::filesystem::directory_iterator(a))
        EXPECT_EQ(criteria::slurp(e.path()), criteria::slurp(b / e.path().filename()));
}
