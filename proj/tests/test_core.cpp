#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ovasr/core.hpp"

using namespace ovasr;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ovasr_test_core";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("rng: equal seeds give equal draws") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng a(seed), b(seed);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.uniform() == b.uniform());
      CHECK(a.normal() == b.normal());
    }
  }
}

TEST_CASE("rng: derived streams do not disturb the parent") {
  Rng a(7), b(7);
  (void)a.derive(3);
  for (int i = 0; i < 16; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(Rng(7).derive(3).uniform() == Rng(7).derive(3).uniform());
  CHECK(Rng(7).derive(3).uniform() != Rng(7).derive(4).uniform());
}

TEST_CASE("rng: uniform_int stays in range") {
  Rng r(42);
  for (int i = 0; i < 1000; ++i) {
    int64_t v = r.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
  }
}

TEST_CASE("annotation: basic parse") {
  auto path = temp_path("basic.tsv");
  {
    std::ofstream f(path);
    f << "0.0\t1.5\tspkA\ta b\n";
  }
  auto segs = read_annotation(path);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].start_s == 0.0);
  CHECK(segs[0].end_s == 1.5);
  CHECK(segs[0].speaker == "spkA");
  CHECK(segs[0].text == "a b");
  CHECK(segs[0].words() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("annotation: empty file gives empty list") {
  auto path = temp_path("empty.tsv");
  std::ofstream(path).close();
  CHECK(read_annotation(path).empty());
}

TEST_CASE("annotation: end before start reports the line number") {
  auto path = temp_path("bad.tsv");
  {
    std::ofstream f(path);
    f << "2.0\t1.0\tspkA\tx\n";
  }
  CHECK_THROWS_WITH_AS(read_annotation(path),
                       doctest::Contains("line 1"), std::runtime_error);
}

TEST_CASE("annotation: malformed line reports the line number") {
  auto path = temp_path("malformed.tsv");
  {
    std::ofstream f(path);
    f << "0.0\t1.0\tspkA\tok\n";
    f << "0.5\tno-fields\n";
  }
  CHECK_THROWS_WITH_AS(read_annotation(path),
                       doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("annotation: write then read round-trips") {
  std::vector<Segment> segs = {{0.0, 1.5, "spkA", "hello there"},
                               {1.5, 2.25, "spkB", "yes"}};
  auto path = temp_path("rt.tsv");
  write_annotation(segs, path);
  CHECK(read_annotation(path) == segs);
}

TEST_CASE("annotation: empty list writes an empty file") {
  auto path = temp_path("rt_empty.tsv");
  write_annotation({}, path);
  std::ifstream f(path);
  std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(all.empty());
  CHECK(read_annotation(path).empty());
}

TEST_CASE("annotation: random lists round-trip (property)") {
  Rng rng(1234);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Segment> segs;
    int n = static_cast<int>(rng.uniform_int(5));
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      Segment s;
      // millisecond-resolution times survive the 3-decimal format
      t += static_cast<double>(1 + rng.uniform_int(2000)) / 1000.0;
      s.start_s = t;
      t += static_cast<double>(1 + rng.uniform_int(5000)) / 1000.0;
      s.end_s = t;
      s.speaker = std::string("spk") + static_cast<char>('a' + rng.uniform_int(4));
      int len = 1 + static_cast<int>(rng.uniform_int(8));
      for (int k = 0; k < len; ++k)
        s.text += letters[static_cast<size_t>(rng.uniform_int(26))];
      segs.push_back(s);
    }
    auto path = temp_path("prop.tsv");
    write_annotation(segs, path);
    CHECK(read_annotation(path) == segs);
  }
}

TEST_CASE("embeddings: parse and normalize") {
  auto path = temp_path("emb.tsv");
  {
    std::ofstream f(path);
    f << "spkA\t1,0\n";
    f << "spkB\t2,0\n";
  }
  auto embs = read_embeddings(path);
  REQUIRE(embs.size() == 2);
  CHECK(embs[0].second == Embedding{1.0, 0.0});
  CHECK(embs[1].second == Embedding{1.0, 0.0});
}

TEST_CASE("embeddings: inconsistent dimension is an error") {
  auto path = temp_path("emb_dim.tsv");
  {
    std::ofstream f(path);
    f << "spkA\t1,0\n";
    f << "spkB\t1,0,0\n";
  }
  CHECK_THROWS_AS(read_embeddings(path), std::runtime_error);
}

TEST_CASE("embeddings: zero vector cannot be normalized") {
  auto path = temp_path("emb_zero.tsv");
  {
    std::ofstream f(path);
    f << "spkA\t0,0,0\n";
  }
  CHECK_THROWS_AS(read_embeddings(path), std::runtime_error);
}

TEST_CASE("embeddings: serialization is stable after one round trip") {
  Rng rng(99);
  std::vector<std::pair<std::string, Embedding>> embs;
  for (int i = 0; i < 20; ++i) {
    Embedding e(16);
    for (double& v : e) v = rng.normal();
    embs.push_back({"spk" + std::to_string(i), normalized(e)});
  }
  auto p1 = temp_path("emb1.tsv");
  auto p2 = temp_path("emb2.tsv");
  write_embeddings(embs, p1);
  auto again = read_embeddings(p1);
  for (size_t i = 0; i < again.size(); ++i) {
    CHECK(std::abs(norm(again[i].second) - 1.0) < 1e-6);
    for (size_t d = 0; d < 16; ++d)
      CHECK(again[i].second[d] == doctest::Approx(embs[i].second[d]).epsilon(1e-5));
  }
  write_embeddings(again, p2);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("vocabulary: encode/decode characters") {
  auto v = Vocabulary::default_chars();
  CHECK(v.size() == 28);
  CHECK(v.blank_index == 0);
  auto ids = v.encode("ab c");
  CHECK(ids.size() == 4);
  CHECK(v.decode(ids) == "ab c");
  CHECK_THROWS_AS(v.encode("A"), std::invalid_argument);
}

TEST_CASE("wav: round trip and format rejection") {
  AudioStream a;
  Rng rng(5);
  a.samples.resize(1600);
  for (auto& s : a.samples) s = static_cast<int16_t>(rng.uniform_int(65536) - 32768);
  auto path = temp_path("x.wav");
  write_wav(a, path);
  auto b = read_wav(path);
  CHECK(b.samples == a.samples);
  CHECK(b.sample_rate == 16000);

  auto bad = temp_path("bad.wav");
  {
    std::ofstream f(bad, std::ios::binary);
    f << "not a wav at all, definitely not 44 bytes of riff";
  }
  CHECK_THROWS_AS(read_wav(bad), std::runtime_error);
}

TEST_CASE("stream validation catches same-speaker overlap") {
  AnnotatedStream st;
  st.segments = {{0.0, 2.0, "a", "xx"}, {1.0, 3.0, "a", "yy"}};
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);
  st.segments = {{0.0, 2.0, "a", "xx"}, {1.0, 3.0, "b", "yy"}};
  CHECK_NOTHROW(st.validate());
}
