#include "mhgs/config.hpp"

#include <fstream>
#include <sstream>

namespace mhgs {

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw contract_error("config: key '" + key + "' expects true/false, got '" + value + "'");
}

Scalar parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const Scalar v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw contract_error("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw contract_error("config: key '" + key + "' expects an integer, got '" + value +
                             "'");
    }
}

}  // namespace

void apply_config_entry(TrainConfig& c, const std::string& key, const std::string& value) {
    if (key == "iterations") c.iterations = static_cast<int>(parse_int(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "threads") c.threads = static_cast<int>(parse_int(value, key));
    else if (key == "strategy") {
        if (value == "mh") c.strategy = DensifyStrategy::mh;
        else if (value == "baseline") c.strategy = DensifyStrategy::baseline;
        else if (value == "none") c.strategy = DensifyStrategy::none;
        else throw contract_error("config: strategy must be mh|baseline|none");
    } else if (key == "background") {
        if (value == "black") c.white_background = false;
        else if (value == "white") c.white_background = true;
        else throw contract_error("config: background must be black|white");
    } else if (key == "lambda") c.loss_weights.lambda = parse_real(value, key);
    else if (key == "lambda_opacity") c.loss_weights.lambda_opacity = parse_real(value, key);
    else if (key == "lambda_scale") c.loss_weights.lambda_scale = parse_real(value, key);
    else if (key == "lambda_v") c.lambda_v = parse_real(value, key);
    else if (key == "densify_t_min") c.densify_t_min = static_cast<int>(parse_int(value, key));
    else if (key == "densify_t_max") c.densify_t_max = static_cast<int>(parse_int(value, key));
    else if (key == "densify_interval")
        c.densify_interval = static_cast<int>(parse_int(value, key));
    else if (key == "sigma_coarse_start") c.sigma_coarse_start = parse_real(value, key);
    else if (key == "sigma_coarse_end") c.sigma_coarse_end = parse_real(value, key);
    else if (key == "sigma_fine_start") c.sigma_fine_start = parse_real(value, key);
    else if (key == "sigma_fine_end") c.sigma_fine_end = parse_real(value, key);
    else if (key == "voxel_start") c.voxel_start = parse_real(value, key);
    else if (key == "voxel_end") c.voxel_end = parse_real(value, key);
    else if (key == "batch_coarse") c.batch_coarse = static_cast<int>(parse_int(value, key));
    else if (key == "batch_fine") c.batch_fine = static_cast<int>(parse_int(value, key));
    else if (key == "batch_scale") c.batch_scale = parse_real(value, key);
    else if (key == "proposal_scale_to_extent")
        c.proposal_scale_to_extent = parse_real(value, key);
    else if (key == "sigma_in_voxels") c.sigma_in_voxels = parse_bool(value, key);
    else if (key == "voxel_scale_to_extent") c.voxel_scale_to_extent = parse_real(value, key);
    else if (key == "importance_alpha") c.importance_weights.alpha = parse_real(value, key);
    else if (key == "importance_beta") c.importance_weights.beta = parse_real(value, key);
    else if (key == "importance_gamma") c.importance_weights.gamma = parse_real(value, key);
    else if (key == "opacity_term") {
        if (value == "deficit") c.opacity_mode = OpacityTermMode::deficit;
        else if (value == "coverage") c.opacity_mode = OpacityTermMode::coverage;
        else throw contract_error("config: opacity_term must be deficit|coverage");
    } else if (key == "relocation") c.relocation = parse_bool(value, key);
    else if (key == "relocate_tau") c.relocate_tau = parse_real(value, key);
    else if (key == "adam_beta1") c.adam.beta1 = parse_real(value, key);
    else if (key == "adam_beta2") c.adam.beta2 = parse_real(value, key);
    else if (key == "adam_eps") c.adam.eps = parse_real(value, key);
    else if (key == "lr_position") c.lr_position = parse_real(value, key);
    else if (key == "lr_scale") c.lr_scale = parse_real(value, key);
    else if (key == "lr_rotation") c.lr_rotation = parse_real(value, key);
    else if (key == "lr_color") c.lr_color = parse_real(value, key);
    else if (key == "lr_opacity") c.lr_opacity = parse_real(value, key);
    else if (key == "init_gaussians") c.init_gaussians = static_cast<int>(parse_int(value, key));
    else if (key == "init_opacity") c.init_opacity = parse_real(value, key);
    else if (key == "init_scale_frac") c.init_scale_frac = parse_real(value, key);
    else if (key == "extent_override") c.extent_override = parse_real(value, key);
    else if (key == "baseline_grad_threshold")
        c.baseline.grad_threshold = parse_real(value, key);
    else if (key == "baseline_size_threshold_frac")
        c.baseline.size_threshold_frac = parse_real(value, key);
    else if (key == "baseline_opacity_prune")
        c.baseline.opacity_prune = parse_real(value, key);
    else if (key == "baseline_split_factor")
        c.baseline.split_scale_factor = parse_real(value, key);
    else if (key == "baseline_max_gaussians")
        c.baseline.max_gaussians = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "checkpoint_interval")
        c.checkpoint_interval = static_cast<int>(parse_int(value, key));
    else if (key == "verify_grid") c.verify_grid = parse_bool(value, key);
    else if (key == "dump_importance") c.dump_importance = parse_bool(value, key);
    else throw contract_error("config: unknown key '" + key + "'");
}

TrainConfig parse_config_file(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw io_error("parse_config_file: cannot open " + path.string());
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw contract_error("config: expected key=value at line " +
                                 std::to_string(line_number));
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_config_entry(base, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return base;
}

void write_config_file(const TrainConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_config_file: cannot open " + path.string());
    char buf[64];
    const auto real = [&](Scalar v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "iterations = " << c.iterations << "\n";
    out << "seed = " << c.seed << "\n";
    out << "threads = " << c.threads << "\n";
    out << "strategy = "
        << (c.strategy == DensifyStrategy::mh
                ? "mh"
                : (c.strategy == DensifyStrategy::baseline ? "baseline" : "none"))
        << "\n";
    out << "background = " << (c.white_background ? "white" : "black") << "\n";
    out << "lambda = " << real(c.loss_weights.lambda) << "\n";
    out << "lambda_opacity = " << real(c.loss_weights.lambda_opacity) << "\n";
    out << "lambda_scale = " << real(c.loss_weights.lambda_scale) << "\n";
    out << "lambda_v = " << real(c.lambda_v) << "\n";
    out << "densify_t_min = " << c.densify_t_min << "\n";
    out << "densify_t_max = " << c.densify_t_max << "\n";
    out << "densify_interval = " << c.densify_interval << "\n";
    out << "sigma_coarse_start = " << real(c.sigma_coarse_start) << "\n";
    out << "sigma_coarse_end = " << real(c.sigma_coarse_end) << "\n";
    out << "sigma_fine_start = " << real(c.sigma_fine_start) << "\n";
    out << "sigma_fine_end = " << real(c.sigma_fine_end) << "\n";
    out << "voxel_start = " << real(c.voxel_start) << "\n";
    out << "voxel_end = " << real(c.voxel_end) << "\n";
    out << "batch_coarse = " << c.batch_coarse << "\n";
    out << "batch_fine = " << c.batch_fine << "\n";
    out << "batch_scale = " << real(c.batch_scale) << "\n";
    out << "proposal_scale_to_extent = " << real(c.proposal_scale_to_extent) << "\n";
    out << "sigma_in_voxels = " << (c.sigma_in_voxels ? "true" : "false") << "\n";
    out << "voxel_scale_to_extent = " << real(c.voxel_scale_to_extent) << "\n";
    out << "importance_alpha = " << real(c.importance_weights.alpha) << "\n";
    out << "importance_beta = " << real(c.importance_weights.beta) << "\n";
    out << "importance_gamma = " << real(c.importance_weights.gamma) << "\n";
    out << "opacity_term = "
        << (c.opacity_mode == OpacityTermMode::deficit ? "deficit" : "coverage") << "\n";
    out << "relocation = " << (c.relocation ? "true" : "false") << "\n";
    out << "relocate_tau = " << real(c.relocate_tau) << "\n";
    out << "adam_beta1 = " << real(c.adam.beta1) << "\n";
    out << "adam_beta2 = " << real(c.adam.beta2) << "\n";
    out << "adam_eps = " << real(c.adam.eps) << "\n";
    out << "lr_position = " << real(c.lr_position) << "\n";
    out << "lr_scale = " << real(c.lr_scale) << "\n";
    out << "lr_rotation = " << real(c.lr_rotation) << "\n";
    out << "lr_color = " << real(c.lr_color) << "\n";
    out << "lr_opacity = " << real(c.lr_opacity) << "\n";
    out << "init_gaussians = " << c.init_gaussians << "\n";
    out << "init_opacity = " << real(c.init_opacity) << "\n";
    out << "init_scale_frac = " << real(c.init_scale_frac) << "\n";
    out << "extent_override = " << real(c.extent_override) << "\n";
    out << "baseline_grad_threshold = " << real(c.baseline.grad_threshold) << "\n";
    out << "baseline_size_threshold_frac = " << real(c.baseline.size_threshold_frac) << "\n";
    out << "baseline_opacity_prune = " << real(c.baseline.opacity_prune) << "\n";
    out << "baseline_split_factor = " << real(c.baseline.split_scale_factor) << "\n";
    out << "baseline_max_gaussians = " << c.baseline.max_gaussians << "\n";
    out << "checkpoint_interval = " << c.checkpoint_interval << "\n";
    out << "verify_grid = " << (c.verify_grid ? "true" : "false") << "\n";
    out << "dump_importance = " << (c.dump_importance ? "true" : "false") << "\n";
}

}  // namespace mhgs
