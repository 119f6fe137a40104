#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace corrgraph {

// Scale presets for the comparison run. "full" uses every available image.
struct ScalePreset {
    std::string name;
    int train_per_class = 0; // 0 = whole split
    int test_per_class = 0;
    int epochs = 0;
};
ScalePreset parse_scale(std::string_view name); // UsageError on unknown

struct ReproduceConfig {
    std::filesystem::path data_dir;
    std::filesystem::path out_dir;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string scale = "desk";
    int threads = 1;
};

// Runs every (graph, feature) cell of the comparison table on whichever of
// mnist/ and fashion/ exist under data_dir, one training run per seed, and
// writes out_dir/table.txt (human table + ORDER verdict lines) and
// out_dir/rows.tsv (one row per run). Datasets and reports are cached under
// out_dir and reused when a rerun finds them intact, so an interrupted run
// resumes where it stopped. Progress and timing go to `log` only; the two
// output files are byte-deterministic. Returns the table text.
std::string run_reproduce(const ReproduceConfig& config, std::ostream& log);

} // namespace corrgraph
