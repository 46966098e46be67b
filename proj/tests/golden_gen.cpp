// Fixture regenerator: rewrites the '<' lines of golden transcripts from the
// current device behaviour. Run after an intentional protocol change, then
// review the diff.

#include "transcript.hpp"

#include <cstdio>
#include <fstream>

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: golden_gen <transcript.txt>...\n");
        return 2;
    }
    for (int k = 1; k < argc; ++k) {
        const std::string regenerated = transcript::regenerate(argv[k]);
        std::ofstream out(argv[k]);
        if (!out) {
            std::fprintf(stderr, "cannot write %s\n", argv[k]);
            return 1;
        }
        out << regenerated;
        std::printf("rewrote %s\n", argv[k]);
    }
    return 0;
}
