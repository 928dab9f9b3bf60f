// Compares a generated result table against a frozen golden copy.
// Comment lines must match exactly; numeric cells within rel/abs tolerance.
// Usage: golden_compare generated golden [rel_tol] [abs_tol]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> read_lines(const char* path) {
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", path);
        std::exit(2);
    }
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
        cells.push_back(cell);
    }
    return cells;
}

bool parse(const std::string& s, double& v) {
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: golden_compare generated golden [rel_tol] [abs_tol]\n");
        return 2;
    }
    const double rel = argc > 3 ? std::atof(argv[3]) : 1e-9;
    const double abs = argc > 4 ? std::atof(argv[4]) : 1e-12;
    const auto got = read_lines(argv[1]);
    const auto want = read_lines(argv[2]);
    if (got.size() != want.size()) {
        std::fprintf(stderr, "line count differs: %zu vs %zu\n", got.size(), want.size());
        return 1;
    }
    int mismatches = 0;
    double worst = 0.0;
    for (std::size_t n = 0; n < got.size(); ++n) {
        if (got[n] == want[n]) {
            continue;
        }
        const bool comment = !want[n].empty() && want[n][0] == '#';
        const auto a = split(got[n]);
        const auto b = split(want[n]);
        bool same = !comment && a.size() == b.size();
        for (std::size_t c = 0; same && c < a.size(); ++c) {
            double x = 0.0;
            double y = 0.0;
            if (a[c] == b[c]) {
                continue;
            }
            if (!parse(a[c], x) || !parse(b[c], y)) {
                same = false;
                break;
            }
            const double diff = std::fabs(x - y);
            worst = std::max(worst, diff);
            same = diff <= abs + rel * std::max(std::fabs(x), std::fabs(y));
        }
        if (!same) {
            if (++mismatches <= 5) {
                std::fprintf(stderr, "line %zu differs:\n  got:  %s\n  want: %s\n", n + 1,
                             got[n].c_str(), want[n].c_str());
            }
        }
    }
    std::printf("%zu lines compared, %d mismatches, largest numeric difference %.3e\n", got.size(),
                mismatches, worst);
    return mismatches == 0 ? 0 : 1;
}
