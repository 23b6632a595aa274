// Writes a small corpus with injected defects, for the CLI tests.
// usage: make_corpus <corpus.jsonl> <annotations.jsonl>

#include <cstdio>
#include <fstream>

#include "corpus_fixture.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <corpus.jsonl> <annotations.jsonl>\n", argv[0]);
    return 2;
  }
  using zt::testing::Defect;
  const auto f = zt::testing::make_fixture(
      20, {Defect::leakage, Defect::structure, Defect::syntax, Defect::inconsistency, Defect::duplicate_plan});
  std::ofstream corpus(argv[1]), anns(argv[2]);
  for (const auto& r : f.records) corpus << zt::corpus::to_json(r).dump() << '\n';
  for (const auto& [id, a] : f.annotations) anns << zt::to_json(a).dump() << '\n';
  return corpus && anns ? 0 : 1;
}
