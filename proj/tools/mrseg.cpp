// Command-line experiment driver. Subcommands:
//   phantom  generate a synthetic cohort + manifest
//   split    assign motion categories and train/val/test splits
//   corrupt  add the synthetic skull and simulate motion artifacts
//   run      train and evaluate one experimental arm (alias: train)
//   report   aggregate the five arm runs into tables and figures
//   import   convert an external CSV slice triple into MRT1 tensors
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrseg/experiment.hpp"

namespace fs = std::filesystem;

namespace {

mrseg::Image2D read_csv_grid(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw mrseg::IoError("cannot open " + path.string());
    std::vector<std::vector<float>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stof(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw mrseg::ValidationError(path.string() + ": ragged CSV rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw mrseg::ValidationError(path.string() + ": empty CSV");
    mrseg::Image2D img(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) img.at(r, c) = rows[r][c];
    }
    return img;
}

mrseg::MaskGrid threshold_mask(const mrseg::Image2D& img) {
    mrseg::MaskGrid m(img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i) m.data[i] = img.data[i] > 0.5f ? 1 : 0;
    return m;
}

struct GlobalOpts {
    std::uint64_t seed = 7;
    int threads = 1;
    std::string config_path;
};

void apply_config(const GlobalOpts& g, mrseg::RunOptions& opt) {
    if (g.config_path.empty()) return;
    std::ifstream in(g.config_path);
    if (!in) throw mrseg::IoError("cannot open config " + g.config_path);
    nlohmann::json j;
    in >> j;
    opt.lr = j.value("lr", opt.lr);
    opt.max_epochs = j.value("max_epochs", opt.max_epochs);
    opt.patience = j.value("patience", opt.patience);
    opt.batch_size = j.value("batch_size", opt.batch_size);
    opt.augment_prob = j.value("augment_prob", opt.augment_prob);
    opt.pad_size = j.value("pad_size", opt.pad_size);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRI motion-artifact segmentation bias experiments"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--seed", global.seed, "global random seed");
    app.add_option("--threads", global.threads, "worker threads for per-case corruption");
    app.add_option("--config", global.config_path, "JSON config overriding training options");

    // phantom
    auto* phantom = app.add_subcommand("phantom", "generate a synthetic cohort");
    int ph_count = 16, ph_size = 64;
    std::string ph_out = "data";
    phantom->add_option("--count", ph_count, "number of cases");
    phantom->add_option("--size", ph_size, "slice side length in pixels");
    phantom->add_option("--out", ph_out, "output directory")->required();

    // split
    auto* split = app.add_subcommand("split", "assign categories and train/val/test splits");
    std::string sp_manifest;
    split->add_option("--manifest", sp_manifest, "manifest path")->required();

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "add skull and simulate motion");
    std::string co_manifest;
    int co_thickness = 3, co_gap = 2;
    double co_intensity = 1.3;
    corrupt->add_option("--manifest", co_manifest, "manifest path")->required();
    corrupt->add_option("--skull-thickness", co_thickness, "skull ring thickness (px)");
    corrupt->add_option("--skull-gap", co_gap, "gap between brain and skull (px)");
    corrupt->add_option("--skull-intensity", co_intensity, "skull brightness multiplier");

    // run / train
    std::string rn_manifest, rn_arm, rn_out, rn_strategy;
    mrseg::RunOptions run_opts;
    auto add_run_opts = [&](CLI::App* cmd) {
        cmd->add_option("--strategy", rn_strategy, "shuffled|curriculum (overrides the arm's default)");
        cmd->add_option("--manifest", rn_manifest, "manifest path")->required();
        cmd->add_option("--arm", rn_arm, "experiment arm name or code")->required();
        cmd->add_option("--out", rn_out, "run output directory")->required();
        cmd->add_option("--lr", run_opts.lr, "learning rate");
        cmd->add_option("--max-epochs", run_opts.max_epochs, "epoch cap");
        cmd->add_option("--patience", run_opts.patience, "early-stopping patience");
        cmd->add_option("--batch-size", run_opts.batch_size, "batch size (4-16)");
        cmd->add_option("--aug-prob", run_opts.augment_prob, "augmentation probability per presentation");
        cmd->add_option("--pad", run_opts.pad_size, "pad target (0 = next multiple of 4)");
    };
    auto* run = app.add_subcommand("run", "train and evaluate one arm");
    add_run_opts(run);
    auto* train = app.add_subcommand("train", "alias of run");
    add_run_opts(train);

    // report
    auto* report = app.add_subcommand("report", "aggregate all five arm runs");
    std::string rp_runs, rp_out;
    report->add_option("--runs", rp_runs, "directory containing the five arm run dirs")->required();
    report->add_option("--out", rp_out, "report output directory")->required();

    // import
    auto* import_cmd = app.add_subcommand("import", "convert CSV slice data into MRT1 tensors");
    std::string im_image, im_brain, im_lesion, im_id, im_out;
    import_cmd->add_option("--image", im_image, "image CSV")->required();
    import_cmd->add_option("--brain-mask", im_brain, "brain mask CSV (thresholded at 0.5)")->required();
    import_cmd->add_option("--lesion-mask", im_lesion, "lesion mask CSV (thresholded at 0.5)")->required();
    import_cmd->add_option("--case-id", im_id, "case id")->required();
    import_cmd->add_option("--out", im_out, "cohort directory (manifest created or extended)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (phantom->parsed()) {
            mrseg::PhantomConfig cfg;
            cfg.size = ph_size;
            if (ph_size % 4 != 0) {
                std::cerr << "warning: size " << ph_size << " is not divisible by 4; training requires it\n";
            }
            mrseg::write_cohort(ph_out, ph_count, cfg, global.seed);
            std::cout << "wrote " << ph_count << " cases to " << ph_out << "\n";
        } else if (split->parsed()) {
            mrseg::assign_cohort(sp_manifest, global.seed);
            std::cout << "assigned categories and splits in " << sp_manifest << "\n";
        } else if (corrupt->parsed()) {
            mrseg::SkullConfig scfg{co_thickness, co_intensity, co_gap};
            mrseg::corrupt_cohort(co_manifest, global.seed, scfg, global.threads);
            std::cout << "corrupted cohort in " << co_manifest << "\n";
        } else if (run->parsed() || train->parsed()) {
            run_opts.seed = global.seed;
            apply_config(global, run_opts);
            run_opts.arm = mrseg::arm_from_string(rn_arm);
            if (!rn_strategy.empty()) run_opts.strategy_override = mrseg::strategy_from_string(rn_strategy);
            mrseg::ArmResult res = mrseg::run_arm(rn_manifest, run_opts, rn_out);
            mrseg::Summary s = mrseg::summarize(mrseg::dice_values(mrseg::ArmRun{
                run_opts.arm, res.dices, res.case_severity, res.log}));
            std::cout << mrseg::to_string(run_opts.arm) << ": mean dice " << s.mean << " +- " << s.stddev << " over "
                      << s.n << " test cases (stopped epoch " << res.log.stopped_epoch << ", best "
                      << res.log.best_epoch << ")\n";
        } else if (report->parsed()) {
            mrseg::write_report(rp_runs, rp_out);
            std::cout << "report written to " << rp_out << "\n";
        } else if (import_cmd->parsed()) {
            mrseg::CaseRecord rec;
            rec.case_id = im_id;
            rec.image = read_csv_grid(im_image);
            rec.brain_mask = threshold_mask(read_csv_grid(im_brain));
            rec.lesion_mask = threshold_mask(read_csv_grid(im_lesion));
            mrseg::validate_case(rec);
            fs::create_directories(im_out);
            fs::path manifest_path = fs::path(im_out) / "manifest.json";
            mrseg::Manifest m;
            if (fs::exists(manifest_path)) m = mrseg::load_manifest(manifest_path);
            if (m.find(im_id)) throw mrseg::ValidationError("case_id already in manifest: " + im_id);
            mrseg::ManifestCase mc;
            mc.case_id = im_id;
            mc.files["image"] = im_id + "_image.mrt1";
            mc.files["brain_mask"] = im_id + "_brain.mrt1";
            mc.files["lesion_mask"] = im_id + "_lesion.mrt1";
            mrseg::write_tensor(fs::path(im_out) / mc.files["image"], rec.image);
            mrseg::write_tensor(fs::path(im_out) / mc.files["brain_mask"], rec.brain_mask);
            mrseg::write_tensor(fs::path(im_out) / mc.files["lesion_mask"], rec.lesion_mask);
            m.cases.push_back(std::move(mc));
            mrseg::save_manifest(manifest_path, m);
            std::cout << "imported " << im_id << " into " << im_out << "\n";
        }
    } catch (const mrseg::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const mrseg::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
