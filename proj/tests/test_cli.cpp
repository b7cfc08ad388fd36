#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "priorvqa/distortion.hpp"
#include "priorvqa/weights_io.hpp"
#include "test_util.hpp"

namespace priorvqa {
namespace {

using testing::TempDir;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd =
      std::string("'") + PRIORVQA_CLI + "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto orig = synthesize_sequence({16, 16, 2, 1, ChannelMode::luma});
    write_sequence(orig, dir.file("orig"), VideoFormat::png_dir());
    write_sequence(apply_distortion(orig, {DistortionKind::awgn, 0.1, 2}), dir.file("dist"),
                   VideoFormat::png_dir());
    std::ofstream(dir.file("small.cfg")) << "encoder_channels = 4,8\nepochs = 1\n";
  }

  std::string train_args(const std::string& out) const {
    return "train --original '" + dir.file("orig") + "' --distorted '" + dir.file("dist") +
           "' --out '" + out + "' --config '" + dir.file("small.cfg") + "' --seed 3";
  }

  TempDir dir;
};

TEST_F(Cli, MissingRequiredArgumentIsUsageError) {
  const auto r = run(dir, "train --original x");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--distorted"), std::string::npos);
  EXPECT_EQ(run(dir, "").code, 2);
  EXPECT_EQ(run(dir, "frobnicate").code, 2);
}

TEST_F(Cli, TrainWritesParseableWeightsAndTrace) {
  const auto r = run(dir, train_args(dir.file("w.bin")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "final_epoch,mean_loss");
  const auto g = read_weights(dir.file("w.bin"));
  EXPECT_EQ(g.role, NetworkRole::restorer);
  EXPECT_EQ(g.config.encoder_channels, (std::vector<std::size_t>{4, 8}));
  const std::string trace = slurp(dir.file("w.bin.trace.csv"));
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "epoch,frame,loss");
}

TEST_F(Cli, TrainIsBitReproducible) {
  ASSERT_EQ(run(dir, train_args(dir.file("a.bin"))).code, 0);
  ASSERT_EQ(run(dir, train_args(dir.file("b.bin"))).code, 0);
  EXPECT_EQ(slurp(dir.file("a.bin")), slurp(dir.file("b.bin")));
  EXPECT_EQ(slurp(dir.file("a.bin.trace.csv")), slurp(dir.file("b.bin.trace.csv")));
}

TEST_F(Cli, ScorePrintsFiniteScoreReproducibly) {
  ASSERT_EQ(run(dir, train_args(dir.file("w.bin"))).code, 0);
  const std::string args =
      "score --weights '" + dir.file("w.bin") + "' --video '" + dir.file("dist") + "'";
  const auto a = run(dir, args);
  ASSERT_EQ(a.code, 0) << a.err;
  std::istringstream lines(a.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, "video_id,score,T,min_psnr,max_psnr");
  EXPECT_EQ(row.substr(0, 5), "dist,");
  const double score = std::stod(row.substr(5));
  EXPECT_TRUE(std::isfinite(score));
  EXPECT_EQ(run(dir, args + " --threads 2").out, a.out);
  EXPECT_EQ(run(dir, args).out, a.out);
}

TEST_F(Cli, RuntimeFailuresExitOne) {
  ASSERT_EQ(run(dir, train_args(dir.file("w.bin"))).code, 0);
  const auto r = run(dir, "score --weights '" + dir.file("w.bin") + "' --video '" +
                              dir.file("nope") + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  std::ofstream(dir.file("junk.bin")) << "not weights";
  EXPECT_EQ(run(dir, "score --weights '" + dir.file("junk.bin") + "' --video '" +
                         dir.file("dist") + "'")
                .code,
            1);
}

TEST_F(Cli, BadConfigIsUsageError) {
  std::ofstream(dir.file("bad.cfg")) << "epoch = 3\n";
  const auto r = run(dir, "train --original '" + dir.file("orig") + "' --distorted '" +
                              dir.file("dist") + "' --out '" + dir.file("w.bin") +
                              "' --config '" + dir.file("bad.cfg") + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
}

TEST_F(Cli, DistortSeverityZeroCopiesInput) {
  const auto r = run(dir, "distort --in '" + dir.file("orig") + "' --out '" +
                              dir.file("copy.y4m") + "' --kind awgn --severity 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_sequence(dir.file("copy.y4m"), VideoFormat::y4m()),
            read_sequence(dir.file("orig"), VideoFormat::png_dir()));
  EXPECT_EQ(run(dir, "distort --in '" + dir.file("orig") + "' --out '" +
                         dir.file("x") + "' --kind jpeg --severity 1")
                .code,
            2);
}

TEST_F(Cli, GradcheckPasses) {
  const auto r = run(dir, "gradcheck");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "op,max_rel_error,elements,status");
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, EvaluateWithMosHookIsPerfect) {
  std::ofstream(dir.file("m.csv")) << "video_id,path,mos,role,pair_path\n"
                                      "ref,orig,,train,dist\n"
                                      "a,orig,1,test,\nb,dist,2,test,\nc,orig,3,test,\n";
  std::ofstream(dir.file("mos.cfg")) << "score_source = mos\n";
  const auto r = run(dir, "evaluate --manifest '" + dir.file("m.csv") + "' --config '" +
                              dir.file("mos.cfg") + "' --report '" + dir.file("r.csv") + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "3,1,1,1,1\n");
  EXPECT_EQ(slurp(dir.file("r.csv")), "video_id,predicted,mos\na,1,1\nb,2,2\nc,3,3\n");
}

TEST_F(Cli, SynthWritesRequestedShape) {
  ASSERT_EQ(run(dir, "synth --out '" + dir.file("s") +
                         "' --frames 3 --width 20 --height 12 --seed 4")
                .code,
            0);
  const auto s = read_sequence(dir.file("s"), VideoFormat::png_dir());
  EXPECT_EQ(s.frame_count(), 3u);
  EXPECT_EQ(s.frame_shape(), (Shape{1, 1, 12, 20}));
}

}  // namespace
}  // namespace priorvqa
