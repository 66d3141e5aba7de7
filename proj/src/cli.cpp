// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>

#include "hivtp/costmodel.hpp"
#include "hivtp/error.hpp"
#include "hivtp/importance.hpp"
#include "hivtp/oracle.hpp"
#include "hivtp/parallel.hpp"
#include "hivtp/pruner.hpp"
#include "hivtp/render.hpp"
#include "hivtp/synth.hpp"
#include "hivtp/tensor_io.hpp"

namespace hivtp::cli {

namespace {

namespace fs = std::filesystem;

std::string format_double(const char* fmt, double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), fmt, value);
    return buffer;
}

std::string read_text(const fs::path& path) {
    const auto bytes = io::read_file_bytes(path);
    return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_text(const std::string& text, const fs::path& path) {
    io::write_file_bytes(std::as_bytes(std::span(text.data(), text.size())), path);
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    io::write_file_bytes(std::as_bytes(std::span(bytes.data(), bytes.size())), path);
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string() + ": " + ec.message());
    }
}

// Pruning knobs shared by prune / verify / bench. Values given on the command
// line win over a --config file.
struct PruneFlags {
    std::size_t regions = 2;
    double topk = 25.0;
    std::size_t window = 2;
    std::string layers = "7-10";
    std::string config_file;

    void add_to(CLI::App& app, bool with_layers) {
        app.add_option("--regions", regions, "Region divisor r (r x r regions)");
        app.add_option("--topk", topk, "Global top-k percentage, 0 < k <= 100");
        app.add_option("--window", window, "Local window side c");
        if (with_layers) {
            app.add_option("--layers", layers, "1-based middle layers, \"7-10\" or \"7,8,9,10\"");
        }
        app.add_option("--config", config_file, "key=value file with regions, topk, window, layers");
    }

    PruneConfig resolve(const CLI::App& app, std::size_t grid_side) const {
        PruneConfig config;
        config.grid_side = grid_side;
        config.region_divisor = regions;
        config.top_percent = topk;
        config.window_side = window;
        std::string layer_spec = layers;
        if (!config_file.empty()) {
            std::istringstream stream(read_text(config_file));
            std::size_t line_number = 0;
            for (std::string line; std::getline(stream, line);) {
                ++line_number;
                if (const auto hash = line.find('#'); hash != std::string::npos) {
                    line.erase(hash);
                }
                line.erase(std::remove_if(line.begin(), line.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); }),
                           line.end());
                if (line.empty()) {
                    continue;
                }
                const auto eq = line.find('=');
                if (eq == std::string::npos) {
                    throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_number) + ": expected key=value");
                }
                const std::string key = line.substr(0, eq);
                const std::string value = line.substr(eq + 1);
                try {
                    if (key == "regions" && app.count("--regions") == 0) {
                        config.region_divisor = std::stoul(value);
                    } else if (key == "topk" && app.count("--topk") == 0) {
                        config.top_percent = std::stod(value);
                    } else if (key == "window" && app.count("--window") == 0) {
                        config.window_side = std::stoul(value);
                    } else if (key == "layers" && (app.get_option_no_throw("--layers") == nullptr || app.count("--layers") == 0)) {
                        layer_spec = value;
                    } else if (key != "regions" && key != "topk" && key != "window" && key != "layers") {
                        throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_number) + ": unknown key \"" + key + "\"");
                    }
                } catch (const std::logic_error&) {
                    throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_number) + ": bad value \"" + value + "\"");
                }
            }
        }
        config.layers = LayerSet::parse(layer_spec);
        config.validate();
        return config;
    }
};

std::string summary_text(const PruneConfig& config, const SelectionResult& selection, bool with_layers) {
    const Budget budget = compute_budget(config);
    std::ostringstream s;
    s << "n=" << config.grid_side << "\n";
    s << "N=" << budget.token_count << "\n";
    s << "regions=" << config.region_divisor << "\n";
    s << "topk=" << format_double("%g", config.top_percent) << "\n";
    s << "window=" << config.window_side << "\n";
    if (with_layers) {
        s << "layers=" << config.layers.to_string() << "\n";
    }
    s << "budget_global=" << budget.global_budget << "\n";
    s << "windows=" << budget.window_count << "\n";
    s << "p_g=" << selection.global_count << "\n";
    s << "p_l=" << selection.local_count << "\n";
    s << "p=" << selection.retained << "\n";
    s << "p_max=" << budget.max_retained << "\n";
    s << "r_retain=" << format_double("%.4f", selection.retain_ratio) << "\n";
    s << "r_max=" << format_double("%.4f", budget.max_ratio) << "\n";
    return s.str();
}

io::TensorBuffer index_tensor(const IndexList& indices) {
    return io::TensorBuffer({static_cast<std::uint32_t>(indices.size())}, indices);
}

IndexList read_indices(const fs::path& path) {
    const auto tensor = io::read_hvtd(path);
    if (tensor.ndim() != 1 || !tensor.holds<std::uint32_t>()) {
        throw Error(ErrorCode::ShapeMismatch, path.string() + " must be a 1-D u32 index list");
    }
    const auto values = tensor.values<std::uint32_t>();
    return IndexList(values.begin(), values.end());
}

std::size_t grid_side_of_scores(const ImportanceScores& scores) {
    return recover_grid_side(scores.size() + 1);
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    std::string first;
    std::string last;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        first = text.substr(0, dots);
        last = text.substr(dots + 2);
    } else if (const auto dash = text.find('-'); dash != std::string::npos) {
        first = text.substr(0, dash);
        last = text.substr(dash + 1);
    } else {
        first = last = text;
    }
    try {
        std::size_t used_first = 0;
        std::size_t used_last = 0;
        const auto a = std::stoull(first, &used_first);
        const auto b = std::stoull(last, &used_last);
        if (used_first == first.size() && used_last == last.size() && a <= b) {
            return {a, b};
        }
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorCode::InvalidArgument, "seed range must look like A..B with A <= B, got \"" + text + "\"");
}

// ---- score ------------------------------------------------------------------

struct ScoreCommand {
    std::string attn;
    std::string layers = "7-10";
    std::string out_path;

    void attach(CLI::App& app) {
        auto* sub = app.add_subcommand("score", "Compute per-token importance scores from an attention stack");
        sub->add_option("--attn", attn, "4-D attention stack [L, H, N+1, N+1] (HVTD)")->required();
        sub->add_option("--layers", layers, "1-based middle layers, \"7-10\" or \"7,8,9,10\"");
        sub->add_option("--out", out_path, "Output scores file (1-D f64 HVTD)")->required();
    }

    int run(std::ostream& out) const {
        const LayerSet layer_set = LayerSet::parse(layers);
        const AttentionStack stack(io::read_hvtd(attn));
        const ImportanceScores scores = compute_importance(stack, layer_set);
        io::write_hvtd(to_tensor(scores), out_path);
        const double sum = std::accumulate(scores.values.begin(), scores.values.end(), 0.0);
        out << "n=" << stack.grid_side() << "\n";
        out << "layers=" << layer_set.to_string() << "\n";
        out << "score_sum=" << format_double("%.12f", sum) << "\n";
        return kExitOk;
    }
};

// ---- prune ------------------------------------------------------------------

struct PruneCommand {
    std::string attn;
    std::string scores_path;
    std::string tokens;
    std::string out_dir;
    PruneFlags flags;
    CLI::App* sub = nullptr;

    void attach(CLI::App& app) {
        sub = app.add_subcommand("prune", "Hierarchical token pruning of one image");
        auto* a = sub->add_option("--attn", attn, "4-D attention stack (HVTD)");
        auto* s = sub->add_option("--scores", scores_path, "Precomputed 1-D scores (HVTD)");
        a->excludes(s);
        sub->add_option("--tokens", tokens, "2-D token matrix [N, d] (HVTD)")->required();
        sub->add_option("--out-dir", out_dir, "Output directory")->required();
        flags.add_to(*sub, true);
    }

    int run(std::ostream& out) const {
        if (attn.empty() == scores_path.empty()) {
            throw Error(ErrorCode::InvalidArgument, "exactly one of --attn or --scores is required");
        }
        if (!scores_path.empty() && sub->count("--layers") != 0) {
            throw Error(ErrorCode::InvalidArgument, "--layers only applies with --attn");
        }
        const TokenMatrix token_matrix(io::read_hvtd(tokens));

        PruneOutput result;
        PruneConfig config;
        if (!attn.empty()) {
            const AttentionStack stack(io::read_hvtd(attn));
            config = flags.resolve(*sub, stack.grid_side());
            result = hivtp_prune(stack, token_matrix, config);
        } else {
            ImportanceScores scores = scores_from_tensor(io::read_hvtd(scores_path));
            config = flags.resolve(*sub, grid_side_of_scores(scores));
            result = prune_with_scores(std::move(scores), token_matrix, config);
        }

        const fs::path dir(out_dir);
        ensure_directory(dir);
        io::write_hvtd(index_tensor(result.selection.final_indices), dir / "indices.hvtd");
        io::write_hvtd(index_tensor(result.selection.global_indices), dir / "global.hvtd");
        io::write_hvtd(index_tensor(result.selection.local_indices), dir / "local.hvtd");
        io::write_hvtd(result.retained.tensor(), dir / "retained.hvtd");
        if (!attn.empty()) {
            io::write_hvtd(to_tensor(result.scores), dir / "scores.hvtd");
        }
        const std::string summary = summary_text(config, result.selection, !attn.empty());
        write_text(summary, dir / "summary.txt");
        out << summary;
        return kExitOk;
    }
};

// ---- render -----------------------------------------------------------------

struct RenderCommand {
    std::string scores_path;
    std::string global_path;
    std::string local_path;
    std::string selection_dir;
    std::size_t grid = 0;
    std::size_t cell_px = 8;
    std::string out_path;
    CLI::App* heatmap = nullptr;
    CLI::App* mask = nullptr;

    void attach(CLI::App& app) {
        auto* sub = app.add_subcommand("render", "Write a PGM heatmap or PPM selection mask");
        sub->require_subcommand(1);

        heatmap = sub->add_subcommand("heatmap", "Importance heatmap (PGM, P5)");
        heatmap->add_option("--scores", scores_path, "1-D scores (HVTD)")->required();
        heatmap->add_option("--cell-px", cell_px, "Pixels per token edge");
        heatmap->add_option("--out", out_path, "Output .pgm")->required();

        mask = sub->add_subcommand("mask", "Retained-token mask (PPM, P6)");
        mask->add_option("--selection", selection_dir, "A prune --out-dir (reads global.hvtd and local.hvtd)");
        mask->add_option("--global", global_path, "Global index list (u32 HVTD)");
        mask->add_option("--local", local_path, "Local index list (u32 HVTD)");
        mask->add_option("--grid", grid, "Grid side n")->required();
        mask->add_option("--cell-px", cell_px, "Pixels per token edge");
        mask->add_option("--out", out_path, "Output .ppm")->required();
    }

    int run() const {
        if (heatmap->parsed()) {
            const auto scores = scores_from_tensor(io::read_hvtd(scores_path));
            const std::size_t n = grid_side_of_scores(scores);
            const std::string comment = "hivtp heatmap n=" + std::to_string(n) + " cell_px=" + std::to_string(cell_px);
            write_bytes(render::render_heatmap(scores, n, cell_px, comment), out_path);
            return kExitOk;
        }

        fs::path global_file = global_path;
        fs::path local_file = local_path;
        if (!selection_dir.empty()) {
            if (!global_path.empty() || !local_path.empty()) {
                throw Error(ErrorCode::InvalidArgument, "--selection excludes --global/--local");
            }
            global_file = fs::path(selection_dir) / "global.hvtd";
            local_file = fs::path(selection_dir) / "local.hvtd";
        } else if (global_path.empty() || local_path.empty()) {
            throw Error(ErrorCode::InvalidArgument, "mask needs --selection or both --global and --local");
        }
        if (grid == 0) {
            throw Error(ErrorCode::InvalidArgument, "--grid must be positive");
        }
        const SelectionResult selection = merge_selection(read_indices(global_file), read_indices(local_file), grid * grid);
        const std::string comment = "hivtp mask n=" + std::to_string(grid) + " cell_px=" + std::to_string(cell_px) +
                                    " p_g=" + std::to_string(selection.global_count) +
                                    " p_l=" + std::to_string(selection.local_count);
        write_bytes(render::render_mask(selection, grid, cell_px, comment), out_path);
        return kExitOk;
    }
};

// ---- verify -----------------------------------------------------------------

struct VerifyCommand {
    std::string seeds = "1..1000";
    std::size_t grid = 12;
    std::string fault;
    PruneFlags flags;
    CLI::App* sub = nullptr;

    void attach(CLI::App& app) {
        sub = app.add_subcommand("verify", "Oracle-equivalence and invariant checks over seeded inputs");
        sub->add_option("--seeds", seeds, "Inclusive seed range A..B");
        sub->add_option("--grid", grid, "Grid side n");
        sub->add_option("--inject-fault", fault, "Mutation check: \"tie-break\" reverses the oracle's tie rule")
            ->check(CLI::IsMember({"tie-break"}));
        flags.add_to(*sub, true);
    }

    struct SeedOutcome {
        bool pipeline_ok = false;
        bool ties_ok = false;
        std::string detail;
    };

    static bool compare(const SelectionResult& engine,
                        const SelectionResult& reference,
                        const ImportanceScores& scores,
                        const PruneConfig& config,
                        std::string& detail) {
        if (engine != reference) {
            detail = "engine and oracle selections differ";
            return false;
        }
        const auto violations = synth::check_selection_invariants(engine, scores, config);
        if (!violations.empty()) {
            detail = violations.front();
            return false;
        }
        return true;
    }

    int run(std::ostream& out) const {
        const auto [first, last] = parse_seed_range(seeds);
        const PruneConfig config = flags.resolve(*sub, grid);
        synth::OracleOptions oracle_options;
        oracle_options.reverse_tie_break = fault == "tie-break";

        const std::size_t count = static_cast<std::size_t>(last - first + 1);
        std::vector<SeedOutcome> outcomes(count);
        parallel_for(count, threads_from_env(), [&](std::size_t i) {
            const std::uint64_t seed = first + i;
            SeedOutcome& outcome = outcomes[i];

            // Continuous scores through the whole pipeline.
            synth::SynthSpec spec;
            spec.seed = seed;
            spec.grid_side = config.grid_side;
            spec.layers = static_cast<std::size_t>(config.layers.max());
            spec.heads = 1;
            spec.noise_scale = 0.5;
            spec.peaks = synth::peaks_per_region(seed, config.grid_side, config.region_divisor, 4.0, 1.0);
            const auto sample = synth::generate(spec);
            const PruneOutput engine = hivtp_prune(sample.stack, sample.tokens, config);
            const SelectionResult reference = synth::oracle_prune(engine.scores, config, oracle_options);
            std::string detail;
            outcome.pipeline_ok = compare(engine.selection, reference, engine.scores, config, detail);
            if (outcome.pipeline_ok && engine.retained != sample.tokens.gather(engine.selection.final_indices)) {
                outcome.pipeline_ok = false;
                detail = "retained rows do not match the final index list";
            }

            // Four score levels, so ties are everywhere.
            const auto tied = synth::random_scores(seed, config.grid_side * config.grid_side, 4);
            std::string tie_detail;
            outcome.ties_ok =
                compare(select_tokens(tied, config), synth::oracle_prune(tied, config, oracle_options), tied, config, tie_detail);
            outcome.detail = !detail.empty() ? detail : tie_detail;
        });

        std::size_t failed = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const auto& o = outcomes[i];
            const bool ok = o.pipeline_ok && o.ties_ok;
            failed += ok ? 0 : 1;
            out << "seed=" << first + i << " pipeline=" << (o.pipeline_ok ? "PASS" : "FAIL")
                << " ties=" << (o.ties_ok ? "PASS" : "FAIL") << " status=" << (ok ? "PASS" : "FAIL");
            if (!ok) {
                out << " detail=\"" << o.detail << "\"";
            }
            out << "\n";
        }
        out << "seeds=" << count << "\n";
        out << "passed=" << count - failed << "\n";
        out << "failed=" << failed << "\n";
        out << "result=" << (failed == 0 ? "PASS" : "FAIL") << "\n";
        return failed == 0 ? kExitOk : kExitIo;
    }
};

// ---- bench ------------------------------------------------------------------

struct BenchCommand {
    std::size_t grid = 24;
    std::size_t images = 100;
    std::size_t heads = 1;
    std::size_t pool = 4;
    std::uint64_t seed = 1;
    std::size_t text_tokens = 0;
    std::string cost_csv;
    std::string decode_csv;
    PruneFlags flags;
    CLI::App* sub = nullptr;

    void attach(CLI::App& app) {
        sub = app.add_subcommand("bench", "Time the pruning engine and optionally project LLM-side speedup");
        sub->add_option("--grid", grid, "Grid side n");
        sub->add_option("--images", images, "Number of images to prune (M)");
        sub->add_option("--heads", heads, "Heads per layer in the synthetic stacks");
        sub->add_option("--pool", pool, "Distinct synthetic images, cycled across the M runs");
        sub->add_option("--seed", seed, "First synthetic seed");
        sub->add_option("--text-tokens", text_tokens, "Text tokens added to the visual count for the cost model");
        sub->add_option("--cost-csv", cost_csv, "tokens,latency_ms prefill measurements");
        sub->add_option("--decode-csv", decode_csv, "tokens,ms_per_token decode measurements");
        flags.add_to(*sub, true);
    }

    int run(std::ostream& out) const {
        if (images == 0 || pool == 0 || heads == 0) {
            throw Error(ErrorCode::InvalidArgument, "--images, --pool and --heads must be positive");
        }
        const PruneConfig config = flags.resolve(*sub, grid);
        const Budget budget = compute_budget(config);

        std::vector<synth::SynthSample> samples;
        for (std::size_t i = 0; i < std::min(pool, images); ++i) {
            synth::SynthSpec spec;
            spec.seed = seed + i;
            spec.grid_side = grid;
            spec.layers = static_cast<std::size_t>(config.layers.max());
            spec.heads = heads;
            spec.peaks = synth::peaks_per_region(seed + i, grid, config.region_divisor, 8.0, 1.0);
            samples.push_back(synth::generate(spec));
        }

        std::vector<double> millis(images);
        double retained_total = 0.0;
        for (std::size_t i = 0; i < images; ++i) {
            const auto& sample = samples[i % samples.size()];
            const auto start = std::chrono::steady_clock::now();
            const PruneOutput result = hivtp_prune(sample.stack, sample.tokens, config);
            const auto stop = std::chrono::steady_clock::now();
            millis[i] = std::chrono::duration<double, std::milli>(stop - start).count();
            retained_total += static_cast<double>(result.selection.retained);
        }
        std::vector<double> sorted = millis;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted.size() % 2 == 1
                                  ? sorted[sorted.size() / 2]
                                  : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

        out << "n=" << grid << "\n";
        out << "images=" << images << "\n";
        out << "median_ms_per_image=" << format_double("%.4f", median) << "\n";
        out << "mean_retained=" << format_double("%.2f", retained_total / static_cast<double>(images)) << "\n";
        out << "p_max=" << budget.max_retained << "\n";
        out << "r_max=" << format_double("%.4f", budget.max_ratio) << "\n";

        if (!cost_csv.empty()) {
            cost::CostCoefficients coeffs;
            coeffs.prefill = cost::fit_prefill(cost::read_csv(cost_csv));
            const bool with_decode = !decode_csv.empty();
            if (with_decode) {
                coeffs.decode = cost::fit_decode(cost::read_csv(decode_csv));
            } else {
                coeffs.decode = cost::DecodeModel{0.0, 1.0};
            }
            const double before = static_cast<double>(budget.token_count + text_tokens);
            const double after = static_cast<double>(budget.max_retained + text_tokens);
            const cost::Speedup speedup = cost::predict_speedup(coeffs, before, after);
            out << "cost_a2=" << format_double("%.9g", coeffs.prefill.a2) << "\n";
            out << "cost_a1=" << format_double("%.9g", coeffs.prefill.a1) << "\n";
            out << "cost_a0=" << format_double("%.9g", coeffs.prefill.a0) << "\n";
            if (with_decode) {
                out << "cost_b1=" << format_double("%.9g", coeffs.decode.b1) << "\n";
                out << "cost_b0=" << format_double("%.9g", coeffs.decode.b0) << "\n";
            }
            out << "tokens_before=" << before << "\n";
            out << "tokens_after=" << after << "\n";
            out << "ttft_ratio=" << format_double("%.4f", speedup.ttft_ratio) << "\n";
            if (with_decode) {
                out << "throughput_ratio=" << format_double("%.4f", speedup.throughput_ratio) << "\n";
            }
        }
        return kExitOk;
    }
};

// ---- synth ------------------------------------------------------------------

struct SynthCommand {
    std::uint64_t seed = 42;
    std::size_t grid = 12;
    std::size_t num_layers = 12;
    std::size_t heads = 4;
    double noise = 0.1;
    std::size_t dim = 16;
    std::vector<std::string> peaks;
    std::size_t peaks_per_region = 0;
    double amplitude = 8.0;
    double radius = 1.0;
    std::string config_file;
    std::string out_attn;
    std::string out_tokens;
    CLI::App* sub = nullptr;

    void attach(CLI::App& app) {
        sub = app.add_subcommand("synth", "Generate a deterministic synthetic attention stack and token matrix");
        sub->add_option("--seed", seed, "splitmix64 seed");
        sub->add_option("--grid", grid, "Grid side n");
        sub->add_option("--num-layers", num_layers, "Encoder layers L");
        sub->add_option("--heads", heads, "Heads per layer H");
        sub->add_option("--noise", noise, "Logit noise scale");
        sub->add_option("--dim", dim, "Token embedding width");
        sub->add_option("--peak", peaks, "Planted peak row,col,amplitude,radius (repeatable)");
        sub->add_option("--peaks-per-region", peaks_per_region, "Plant one seeded peak in each of r x r regions");
        sub->add_option("--amplitude", amplitude, "Amplitude for --peaks-per-region");
        sub->add_option("--radius", radius, "Radius for --peaks-per-region");
        sub->add_option("--config", config_file, "key=value spec file (seed, grid, layers, heads, noise, dim, peak)");
        sub->add_option("--out-attn", out_attn, "Output attention stack (HVTD)")->required();
        sub->add_option("--out-tokens", out_tokens, "Output token matrix (HVTD)")->required();
    }

    int run(std::ostream& out) const {
        synth::SynthSpec spec;
        spec.seed = seed;
        spec.grid_side = grid;
        spec.layers = num_layers;
        spec.heads = heads;
        spec.noise_scale = noise;
        spec.token_dim = dim;
        if (!config_file.empty()) {
            spec = synth::parse_spec_text(read_text(config_file), spec);
        }
        // Explicit flags override the file.
        std::string overrides;
        if (sub->count("--seed") != 0) overrides += "seed=" + std::to_string(seed) + "\n";
        if (sub->count("--grid") != 0) overrides += "grid=" + std::to_string(grid) + "\n";
        if (sub->count("--num-layers") != 0) overrides += "layers=" + std::to_string(num_layers) + "\n";
        if (sub->count("--heads") != 0) overrides += "heads=" + std::to_string(heads) + "\n";
        if (sub->count("--noise") != 0) overrides += "noise=" + format_double("%.17g", noise) + "\n";
        if (sub->count("--dim") != 0) overrides += "dim=" + std::to_string(dim) + "\n";
        for (const auto& p : peaks) {
            overrides += "peak=" + p + "\n";
        }
        spec = synth::parse_spec_text(overrides, spec);
        if (peaks_per_region != 0) {
            auto planted = synth::peaks_per_region(spec.seed, spec.grid_side, peaks_per_region, amplitude, radius);
            spec.peaks.insert(spec.peaks.end(), planted.begin(), planted.end());
        }

        const auto sample = synth::generate(spec);
        io::write_hvtd(sample.stack.tensor(), out_attn);
        io::write_hvtd(sample.tokens.tensor(), out_tokens);
        out << "seed=" << spec.seed << "\n";
        out << "n=" << spec.grid_side << "\n";
        out << "layers=" << spec.layers << "\n";
        out << "heads=" << spec.heads << "\n";
        out << "peaks=" << spec.peaks.size() << "\n";
        return kExitOk;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"hivtp: attention-based hierarchical visual token pruning"};
    app.require_subcommand(1);

    ScoreCommand score;
    PruneCommand prune;
    RenderCommand render_cmd;
    VerifyCommand verify;
    BenchCommand bench;
    SynthCommand synth_cmd;
    score.attach(app);
    prune.attach(app);
    render_cmd.attach(app);
    verify.attach(app);
    bench.attach(app);
    synth_cmd.attach(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        const auto* selected = app.get_subcommands().front();
        const std::string name = selected->get_name();
        if (name == "score") return score.run(out);
        if (name == "prune") return prune.run(out);
        if (name == "render") return render_cmd.run();
        if (name == "verify") return verify.run(out);
        if (name == "bench") return bench.run(out);
        if (name == "synth") return synth_cmd.run(out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    return kExitValidation;
}

}  // namespace hivtp::cli
