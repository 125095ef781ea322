#include "mhgs/metrics.hpp"

#include "mhgs/ply.hpp"
#include "mhgs/render.hpp"
#include "mhgs/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mhgs {

Scalar psnr(const ImageBuffer& a, const ImageBuffer& b) {
    const Scalar mse = mean_squared_error(a, b);
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

EvalReport evaluate(const GaussianCloud& cloud, const Dataset& dataset,
                    const std::vector<MetricsRow>* metrics_log,
                    const RenderSettings& settings) {
    if (dataset.test_indices.empty()) throw contract_error("evaluate: empty test split");
    EvalReport report;
    report.view_indices = dataset.test_indices;
    for (const int v : dataset.test_indices) {
        const RenderOutput out = render(cloud, dataset.cameras[static_cast<std::size_t>(v)],
                                        settings);
        const ImageBuffer& target = dataset.images[static_cast<std::size_t>(v)];
        report.view_psnr.push_back(psnr(out.image, target));
        report.view_ssim.push_back(ssim_map(out.image, target).mean());
    }
    report.mean_psnr = std::accumulate(report.view_psnr.begin(), report.view_psnr.end(), 0.0) /
                       static_cast<Scalar>(report.view_psnr.size());
    report.mean_ssim = std::accumulate(report.view_ssim.begin(), report.view_ssim.end(), 0.0) /
                       static_cast<Scalar>(report.view_ssim.size());
    report.n_gaussians = cloud.size();
    report.storage_bytes = ply_storage_bytes(cloud);
    if (metrics_log && !metrics_log->empty())
        report.iteration_at_98pct = convergence_point(*metrics_log);
    return report;
}

std::int64_t convergence_point(const std::vector<MetricsRow>& metrics) {
    if (metrics.empty()) throw contract_error("convergence_point: empty metrics");
    const Scalar threshold = 0.98 * metrics.back().psnr_train;
    for (const auto& row : metrics)
        if (row.psnr_train >= threshold) return row.iter;
    return metrics.back().iter;
}

namespace {

constexpr char kMetricsHeader[] =
    "iter,loss,l1,dssim,psnr_train,n_gaussians,births,relocations,accept_coarse,accept_fine,"
    "seconds";

std::string format_double(Scalar v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_metrics_csv: cannot open " + path.string());
    out << kMetricsHeader << "\n";
    for (const auto& r : rows) {
        out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.l1) << ','
            << format_double(r.dssim) << ',' << format_double(r.psnr_train) << ','
            << r.n_gaussians << ',' << r.births << ',' << r.relocations << ','
            << format_double(r.accept_coarse) << ',' << format_double(r.accept_fine) << ','
            << format_double(r.seconds) << "\n";
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw io_error("read_metrics_csv: cannot open " + csv_path.string());
    std::string line;
    int line_number = 0;
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        if (line_number == 1) {
            if (line != kMetricsHeader)
                throw io_error("read_metrics_csv: unexpected header at line 1");
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        MetricsRow r;
        fields >> r.iter >> r.loss >> r.l1 >> r.dssim >> r.psnr_train >> r.n_gaussians >>
            r.births >> r.relocations >> r.accept_coarse >> r.accept_fine >> r.seconds;
        if (!fields)
            throw io_error("read_metrics_csv: malformed row at line " +
                           std::to_string(line_number));
        rows.push_back(r);
    }
    return rows;
}

std::int64_t convergence_point_csv(const std::filesystem::path& csv_path) {
    const std::vector<MetricsRow> rows = read_metrics_csv(csv_path);
    if (rows.empty()) throw io_error("convergence_point_csv: no data rows in " +
                                     csv_path.string());
    return convergence_point(rows);
}

namespace {

std::vector<Scalar> average_ranks(const std::vector<Scalar>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Scalar> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const Scalar rank = 0.5 * static_cast<Scalar>(i + j) + 1.0;  // average of tied ranks
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<Scalar> spearman(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw contract_error("spearman: need two equally sized samples");
    const std::vector<Scalar> rx = average_ranks(xs);
    const std::vector<Scalar> ry = average_ranks(ys);
    const Scalar n = static_cast<Scalar>(xs.size());
    const Scalar mean_rank = (n + 1.0) / 2.0;
    Scalar sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Scalar dx = rx[i] - mean_rank;
        const Scalar dy = ry[i] - mean_rank;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace mhgs
