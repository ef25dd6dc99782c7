// Experiment driver behind the CLI: cohort generation, category/split
// assignment, skull + motion corruption, the five experimental arms, and
// report generation (tables, per-case CSVs, SVG figures).
#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrseg/curriculum.hpp"
#include "mrseg/dataset.hpp"
#include "mrseg/errors.hpp"
#include "mrseg/motion.hpp"
#include "mrseg/phantom.hpp"
#include "mrseg/segmenter.hpp"
#include "mrseg/stats.hpp"
#include "mrseg/svg.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

enum class ExperimentArm {
    ShuffledNoSkullClean,
    ShuffledSkullClean,
    ShuffledSkullCleanOnMotion,
    ShuffledSkullMotion,
    CurriculumSkullMotion,
};

inline constexpr std::array<ExperimentArm, 5> kAllArms = {
    ExperimentArm::ShuffledNoSkullClean,     ExperimentArm::ShuffledSkullClean,
    ExperimentArm::ShuffledSkullCleanOnMotion, ExperimentArm::ShuffledSkullMotion,
    ExperimentArm::CurriculumSkullMotion,
};

inline const char* to_string(ExperimentArm arm) {
    switch (arm) {
        case ExperimentArm::ShuffledNoSkullClean: return "shuffled-noskull-clean";
        case ExperimentArm::ShuffledSkullClean: return "shuffled-skull-clean";
        case ExperimentArm::ShuffledSkullCleanOnMotion: return "shuffled-skull-cleanonmotion";
        case ExperimentArm::ShuffledSkullMotion: return "shuffled-skull-motion";
        case ExperimentArm::CurriculumSkullMotion: return "curriculum-skull-motion";
    }
    return "?";
}

// Table-2 style shorthand: s/c = strategy, nS/S = skull, C/M = test data.
inline const char* arm_code(ExperimentArm arm) {
    switch (arm) {
        case ExperimentArm::ShuffledNoSkullClean: return "s_nSC";
        case ExperimentArm::ShuffledSkullClean: return "s_SC";
        case ExperimentArm::ShuffledSkullCleanOnMotion: return "s_SCoM";
        case ExperimentArm::ShuffledSkullMotion: return "s_SM";
        case ExperimentArm::CurriculumSkullMotion: return "c_SM";
    }
    return "?";
}

inline ExperimentArm arm_from_string(const std::string& s) {
    for (ExperimentArm a : kAllArms) {
        if (s == to_string(a) || s == arm_code(a)) return a;
    }
    throw ValidationError("unknown experiment arm: " + s);
}

// ---------------------------------------------------------------------------
// Cohort generation: tensors + manifest on disk.

inline Manifest write_cohort(const std::filesystem::path& out_dir, int count, const PhantomConfig& cfg,
                             std::uint64_t seed) {
    std::filesystem::create_directories(out_dir);
    std::vector<CaseRecord> cases = generate_cohort(count, cfg, seed);
    Manifest m;
    m.seed = seed;
    for (const auto& rec : cases) {
        ManifestCase mc;
        mc.case_id = rec.case_id;
        mc.files["image"] = rec.case_id + "_image.mrt1";
        mc.files["brain_mask"] = rec.case_id + "_brain.mrt1";
        mc.files["lesion_mask"] = rec.case_id + "_lesion.mrt1";
        write_tensor(out_dir / mc.files["image"], rec.image);
        write_tensor(out_dir / mc.files["brain_mask"], rec.brain_mask);
        write_tensor(out_dir / mc.files["lesion_mask"], rec.lesion_mask);
        m.cases.push_back(std::move(mc));
    }
    save_manifest(out_dir / "manifest.json", m);
    return m;
}

// Assigns categories (scaled 64/64/64/67 proportions) and per-category
// train/val/test splits, then rewrites the manifest in place.
inline void assign_cohort(const std::filesystem::path& manifest_path, std::uint64_t seed) {
    Manifest m = load_manifest(manifest_path);
    int total = static_cast<int>(m.cases.size());
    std::array<int, 4> sizes = scale_category_sizes(total);

    // category assignment over lightweight records
    std::vector<CaseRecord> stubs(m.cases.size());
    for (std::size_t i = 0; i < m.cases.size(); ++i) stubs[i].case_id = m.cases[i].case_id;
    Pcg32 cat_rng = Pcg32::derive(seed, 0xca7);
    assign_categories(stubs, sizes, cat_rng);

    for (int cat = 0; cat < 4; ++cat) {
        std::vector<CaseRecord*> group;
        for (auto& s : stubs) {
            if (static_cast<int>(*s.severity) == cat) group.push_back(&s);
        }
        SplitSpec spec = scale_split(static_cast<Severity>(cat), static_cast<int>(group.size()));
        Pcg32 split_rng = Pcg32::derive(seed, 0x59117 + static_cast<std::uint64_t>(cat));
        assign_splits(group, spec, split_rng);
    }
    for (std::size_t i = 0; i < m.cases.size(); ++i) {
        m.cases[i].severity = stubs[i].severity;
        m.cases[i].split = stubs[i].split;
    }
    save_manifest(manifest_path, m);
}

// Adds the synthetic skull to every case and applies a sampled motion
// trajectory per non-minimal case; labels are untouched. Writes skull_image
// and motion_image tensors and rewrites the manifest.
inline void corrupt_cohort(const std::filesystem::path& manifest_path, std::uint64_t seed,
                           const SkullConfig& skull_cfg = {}, int threads = 1) {
    Manifest m = load_manifest(manifest_path);
    std::filesystem::path base = manifest_path.parent_path();
    for (const auto& c : m.cases) {
        if (!c.severity) throw ValidationError("corrupt: case " + c.case_id + " has no severity; run split first");
    }

    auto process = [&](std::size_t i) {
        ManifestCase& c = m.cases[i];
        Image2D image = read_image(base / c.files.at("image"));
        MaskGrid brain = read_mask(base / c.files.at("brain_mask"));
        Image2D with_skull = add_skull(image, brain, skull_cfg);
        Pcg32 rng = Pcg32::derive(seed, 0xc0de0000ULL + i);
        MotionTrajectory traj = sample_trajectory(*c.severity, with_skull.height, rng);
        Image2D corrupted = corrupt_image(with_skull, traj);
        c.files["skull_image"] = c.case_id + "_skull.mrt1";
        c.files["motion_image"] = c.case_id + "_motion.mrt1";
        write_tensor(base / c.files["skull_image"], with_skull);
        write_tensor(base / c.files["motion_image"], corrupted);
    };

    if (threads <= 1) {
        for (std::size_t i = 0; i < m.cases.size(); ++i) process(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t n = m.cases.size();
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < n; i += threads) process(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    save_manifest(manifest_path, m);
}

// ---------------------------------------------------------------------------
// Arm execution.

struct RunOptions {
    ExperimentArm arm = ExperimentArm::ShuffledNoSkullClean;
    double lr = 1e-3;
    std::uint64_t seed = 7;
    int max_epochs = 30;
    int patience = 7;
    int batch_size = 8;
    double augment_prob = 0.5;  // chance per presentation of one random augmentation
    int pad_size = 0;           // 0 = round up to the next multiple of 4
    std::optional<OrderingStrategy> strategy_override;  // defaults to the arm's strategy
};

namespace detail {

inline const char* train_role(ExperimentArm arm) {
    switch (arm) {
        case ExperimentArm::ShuffledNoSkullClean: return "image";
        case ExperimentArm::ShuffledSkullClean:
        case ExperimentArm::ShuffledSkullCleanOnMotion: return "skull_image";
        default: return "motion_image";
    }
}

inline const char* test_role(ExperimentArm arm) {
    switch (arm) {
        case ExperimentArm::ShuffledNoSkullClean: return "image";
        case ExperimentArm::ShuffledSkullClean: return "skull_image";
        default: return "motion_image";
    }
}

inline int round_up4(int v) { return (v + 3) / 4 * 4; }

inline TrainCase load_train_case(const std::filesystem::path& base, const ManifestCase& mc, const char* role,
                                 int pad_size) {
    auto it = mc.files.find(role);
    if (it == mc.files.end()) {
        throw ValidationError("case " + mc.case_id + " lacks '" + role + "' data; run corrupt first");
    }
    Image2D image = read_image(base / it->second);
    MaskGrid brain = read_mask(base / mc.files.at("brain_mask"));
    MaskGrid lesion = read_mask(base / mc.files.at("lesion_mask"));
    image = normalize_in_brain(image, brain);
    int target = pad_size > 0 ? pad_size : round_up4(std::max(image.height, image.width));
    if (image.height != target || image.width != target) {
        image = pad_to(image, target);
        lesion = pad_to(lesion, target);
    }
    TrainCase tc;
    tc.case_id = mc.case_id;
    tc.image = std::move(image);
    tc.target = std::move(lesion);
    tc.severity = mc.severity;
    return tc;
}

}  // namespace detail

struct ArmResult {
    std::vector<DiceResult> dices;
    std::map<std::string, Severity> case_severity;
    TrainLog log;
};

// Trains the arm's strategy on its training variant, evaluates dice on its
// test variant, and writes dice.csv, trainlog.json, run.json, and a
// checkpoint under out_dir.
inline ArmResult run_arm(const std::filesystem::path& manifest_path, const RunOptions& opt,
                         const std::filesystem::path& out_dir) {
    Manifest m = load_manifest(manifest_path);
    std::filesystem::path base = manifest_path.parent_path();

    std::vector<TrainCase> train, val, test;
    std::map<std::string, Severity> case_severity;
    for (const auto& mc : m.cases) {
        if (!mc.severity || !mc.split) {
            throw ValidationError("case " + mc.case_id + " not split; run split first");
        }
        case_severity[mc.case_id] = *mc.severity;
        switch (*mc.split) {
            case Split::Train:
                train.push_back(detail::load_train_case(base, mc, detail::train_role(opt.arm), opt.pad_size));
                break;
            case Split::Val:
                val.push_back(detail::load_train_case(base, mc, detail::train_role(opt.arm), opt.pad_size));
                break;
            case Split::Test:
                test.push_back(detail::load_train_case(base, mc, detail::test_role(opt.arm), opt.pad_size));
                break;
        }
    }

    TrainConfig cfg;
    cfg.max_epochs = opt.max_epochs;
    cfg.patience = opt.patience;
    cfg.batch_size = opt.batch_size;
    cfg.lr = opt.lr;
    cfg.seed = opt.seed;
    cfg.strategy =
        opt.arm == ExperimentArm::CurriculumSkullMotion ? OrderingStrategy::Curriculum : OrderingStrategy::Shuffled;
    if (opt.strategy_override) cfg.strategy = *opt.strategy_override;

    PresentHook hook = nullptr;
    if (opt.augment_prob > 0.0) {
        std::uint64_t seed = opt.seed;
        double prob = opt.augment_prob;
        hook = [seed, prob](Image2D& img, MaskGrid& msk, int epoch, int case_index) {
            Pcg32 rng = Pcg32::derive(seed, 0xa06000ULL + static_cast<std::uint64_t>(epoch) * 4096 +
                                                static_cast<std::uint64_t>(case_index));
            if (rng.next_double() < prob) {
                AugmentKind kind = kAllAugmentKinds[rng.next_below(static_cast<std::uint32_t>(kAllAugmentKinds.size()))];
                augment(img, msk, kind, rng);
            }
        };
    }

    auto [params, log] = fit(train, val, cfg, hook);

    ArmResult result;
    result.log = log;
    result.case_severity = case_severity;
    for (const auto& tc : test) {
        MaskGrid pred = predict_mask(params, tc.image);
        result.dices.push_back({tc.case_id, dice_score(pred, tc.target)});
    }
    std::sort(result.dices.begin(), result.dices.end(),
              [](const DiceResult& a, const DiceResult& b) { return a.case_id < b.case_id; });

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir / "dice.csv", std::ios::binary);
        if (!csv) throw IoError("cannot write " + (out_dir / "dice.csv").string());
        csv << "case_id,severity,dice\n";
        char buf[64];
        for (const auto& d : result.dices) {
            std::snprintf(buf, sizeof(buf), "%.6f", d.dice);
            csv << d.case_id << "," << to_string(case_severity.at(d.case_id)) << "," << buf << "\n";
        }
    }
    {
        std::ofstream jf(out_dir / "trainlog.json", std::ios::binary);
        jf << trainlog_to_json(log).dump(2) << "\n";
    }
    {
        nlohmann::json run;
        run["arm"] = to_string(opt.arm);
        run["arm_code"] = arm_code(opt.arm);
        run["seed"] = opt.seed;
        run["lr"] = opt.lr;
        run["max_epochs"] = opt.max_epochs;
        run["patience"] = opt.patience;
        run["batch_size"] = opt.batch_size;
        run["augment_prob"] = opt.augment_prob;
        run["strategy"] = to_string(cfg.strategy);
        std::ofstream jf(out_dir / "run.json", std::ios::binary);
        jf << run.dump(2) << "\n";
    }
    save_checkpoint(out_dir / "checkpoint", params);
    return result;
}

// ---------------------------------------------------------------------------
// Report: Table 1/2/3 analogues + figures.

struct ArmRun {
    ExperimentArm arm;
    std::vector<DiceResult> dices;
    std::map<std::string, Severity> case_severity;
    TrainLog log;
};

inline ArmRun load_arm_run(const std::filesystem::path& dir, ExperimentArm arm) {
    ArmRun run;
    run.arm = arm;
    std::ifstream csv(dir / "dice.csv");
    if (!csv) throw ValidationError("missing arm run: " + std::string(to_string(arm)) + " (" + dir.string() + ")");
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        std::string id = line.substr(0, c1);
        run.case_severity[id] = severity_from_string(line.substr(c1 + 1, c2 - c1 - 1));
        run.dices.push_back({id, std::stod(line.substr(c2 + 1))});
    }
    std::ifstream jf(dir / "trainlog.json");
    if (jf) {
        nlohmann::json j;
        jf >> j;
        run.log.train_loss = j.value("train_loss", std::vector<double>{});
        run.log.val_loss = j.value("val_loss", std::vector<double>{});
        run.log.stopped_epoch = j.value("stopped_epoch", 0);
        run.log.best_epoch = j.value("best_epoch", 0);
    }
    return run;
}

inline std::vector<double> dice_values(const ArmRun& run) {
    std::vector<double> v;
    for (const auto& d : run.dices) v.push_back(d.dice);
    return v;
}

// Dice values of one arm restricted to a category, ordered by case_id.
inline std::vector<double> dice_values(const ArmRun& run, Severity cat) {
    std::vector<double> v;
    for (const auto& d : run.dices) {
        if (run.case_severity.at(d.case_id) == cat) v.push_back(d.dice);
    }
    return v;
}

// Expects runs_dir/<arm-name>/ for all five arms; writes table1-3 CSVs,
// report.json, and SVG figures into out_dir.
inline nlohmann::json write_report(const std::filesystem::path& runs_dir, const std::filesystem::path& out_dir) {
    std::map<ExperimentArm, ArmRun> runs;
    for (ExperimentArm arm : kAllArms) runs.emplace(arm, load_arm_run(runs_dir / to_string(arm), arm));
    std::filesystem::create_directories(out_dir);

    nlohmann::json report;
    char buf[64];

    // Table 1 analogue: mean +- std per arm
    {
        std::ofstream csv(out_dir / "table1.csv", std::ios::binary);
        csv << "arm,arm_code,mean_dice,std_dice,n\n";
        for (ExperimentArm arm : kAllArms) {
            Summary s = summarize(dice_values(runs.at(arm)));
            std::snprintf(buf, sizeof(buf), "%.4f,%.4f", s.mean, s.stddev);
            csv << to_string(arm) << "," << arm_code(arm) << "," << buf << "," << s.n << "\n";
            report["table1"][to_string(arm)] = {{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
        }
    }

    // Table 2 analogue: the four cross-arm comparisons, ANOVA p-values
    const std::array<std::pair<ExperimentArm, ExperimentArm>, 4> comparisons = {{
        {ExperimentArm::ShuffledNoSkullClean, ExperimentArm::ShuffledSkullClean},
        {ExperimentArm::ShuffledSkullClean, ExperimentArm::ShuffledSkullMotion},
        {ExperimentArm::ShuffledSkullMotion, ExperimentArm::CurriculumSkullMotion},
        {ExperimentArm::ShuffledSkullClean, ExperimentArm::CurriculumSkullMotion},
    }};
    {
        std::ofstream csv(out_dir / "table2.csv", std::ios::binary);
        csv << "comparison,test,statistic,p_value,n\n";
        for (const auto& [a, b] : comparisons) {
            StatTestResult r = anova_oneway({dice_values(runs.at(a)), dice_values(runs.at(b))});
            std::string name = std::string(arm_code(a)) + " vs. " + arm_code(b);
            std::snprintf(buf, sizeof(buf), "%.6g,%.6g", r.statistic, r.p_value);
            csv << name << "," << r.test_name << "," << buf << "," << r.n << "\n";
            report["table2"].push_back(
                {{"comparison", name}, {"test", r.test_name}, {"statistic", r.statistic}, {"p", r.p_value}});
        }
    }

    // Table 3 analogue: shuffled vs curriculum per category, paired on case id
    {
        const ArmRun& sm = runs.at(ExperimentArm::ShuffledSkullMotion);
        const ArmRun& cm = runs.at(ExperimentArm::CurriculumSkullMotion);
        std::ofstream csv(out_dir / "table3.csv", std::ios::binary);
        csv << "category,test,statistic,p_value,n\n";
        for (int cat = 0; cat < 4; ++cat) {
            Severity sev = static_cast<Severity>(cat);
            std::vector<double> a = dice_values(sm, sev);
            std::vector<double> b = dice_values(cm, sev);
            StatTestResult r = choose_paired_test(a, b);
            std::snprintf(buf, sizeof(buf), "%.6g,%.6g", r.statistic, r.p_value);
            csv << to_string(sev) << "," << r.test_name << "," << buf << "," << r.n << "\n";
            report["table3"].push_back(
                {{"category", to_string(sev)}, {"test", r.test_name}, {"statistic", r.statistic}, {"p", r.p_value}});
        }
    }

    // Figures
    {
        std::vector<svg::BoxGroup> groups;
        for (ExperimentArm arm : kAllArms) groups.push_back({arm_code(arm), dice_values(runs.at(arm))});
        std::ofstream f(out_dir / "fig_arms.svg", std::ios::binary);
        f << svg::box_plot(groups, "dice by arm");
    }
    for (int cat = 0; cat < 4; ++cat) {
        Severity sev = static_cast<Severity>(cat);
        std::vector<svg::BoxGroup> groups;
        groups.push_back({"s_SM", dice_values(runs.at(ExperimentArm::ShuffledSkullMotion), sev)});
        groups.push_back({"c_SM", dice_values(runs.at(ExperimentArm::CurriculumSkullMotion), sev)});
        std::ofstream f(out_dir / (std::string("fig_category_") + to_string(sev) + ".svg"), std::ios::binary);
        f << svg::box_plot(groups, std::string("dice, ") + to_string(sev) + " category");
    }
    for (ExperimentArm arm : kAllArms) {
        const ArmRun& run = runs.at(arm);
        std::ofstream f(out_dir / (std::string("fig_loss_") + to_string(arm) + ".svg"), std::ios::binary);
        f << svg::loss_curves(run.log.train_loss, run.log.val_loss, std::string("loss, ") + arm_code(arm));
    }

    std::ofstream jf(out_dir / "report.json", std::ios::binary);
    jf << report.dump(2) << "\n";
    return report;
}

}  // namespace mrseg
