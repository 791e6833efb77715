#include "chromatwin/cli.hpp"
#include "chromatwin/image.hpp"
#include "chromatwin/service.hpp"
#include "chromatwin/vision.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

using namespace chromatwin;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "chromatwin");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> n{0};
        path = fs::temp_directory_path() / ("chromatwin-cli-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& name = "") const { return (path / name).string(); }
};

void seed(const std::string& dir) {
    int i = 0;
    for (const char* r : {"0,0,0,0", "20,0,0,0", "0,20,0,0", "0,0,20,0", "0,0,0,20", "10,10,10,10", "20,20,20,20"}) {
        const std::string rgb = std::to_string(200 - 20 * i) + "," + std::to_string(100 + 10 * i) + ",50";
        REQUIRE(run_cli({"--data-dir", dir, "submit", "--recipe", r, "--rgb", rgb, "--contributor", "s", "--institution", "u"}).code == 0);
        ++i;
    }
}

} // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli({}).code == cli::kUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
    CHECK(run_cli({"--help"}).code == cli::kOk);
    TempDir d;
    const auto r = run_cli({"--data-dir", d.str(), "suggest", "--target", "300,0,0"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.rfind("error: validation:", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(run_cli({"--data-dir", d.str(), "--url", "http://127.0.0.1:1", "records"}).code == cli::kUsage);
    CHECK(run_cli({"--format", "xml", "simulate", "--recipe", "0,0,0,0"}).code == cli::kUsage);
}

TEST_CASE("template then ingest measures the fill") {
    TempDir d;
    CHECK(run_cli({"template", d.str("t.png"), "--fill", "4,90,152"}).code == 0);
    CHECK(vision::detect_markers(load_image(d.str("t.png"))).size() == 4);
    auto r = run_cli({"--data-dir", d.str("db"), "ingest", d.str("t.png"), "--recipe", "0,0,20,0", "--contributor", "ana",
                  "--institution", "lab"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("measured 4.00 90.00 152.00") != std::string::npos);
    CHECK(r.out.find("repeat") == std::string::npos);
    r = run_cli({"--data-dir", d.str("db"), "ingest", d.str("t.png"), "--recipe", "0,0,20,0", "--contributor", "ana",
             "--institution", "lab"});
    CHECK(r.out.find("repeat: recipe 0,0,20,0 was already recorded (id 1)") != std::string::npos);

    CHECK(run_cli({"template", d.str("bad.png"), "--roi-fraction", "0"}).code == cli::kUsage);
    CHECK(run_cli({"template", d.str("no/such/dir/t.png")}).code == cli::kStorage);
    CHECK(run_cli({"template", d.str("w.ppm"), "--roi-fraction", "0.5"}).code == 0);
}

TEST_CASE("three-marker photo exits 2") {
    TempDir d;
    const auto g = vision::TemplateGeometry::standard();
    Image img = vision::render_sample(g, {4, 90, 152});
    const auto r = g.marker_rect(0);
    for (int y = 0; y < static_cast<int>(r.bottom()) + 4; ++y)
        for (int x = 0; x < static_cast<int>(r.right()) + 4; ++x) img.set(x, y, {255, 255, 255});
    save_image(img, d.str("three.png"));
    const auto res = run_cli({"--data-dir", d.str("db"), "ingest", d.str("three.png"), "--recipe", "1,1,1,1",
                          "--contributor", "a", "--institution", "b"});
    CHECK(res.code == cli::kVision);
    CHECK(res.err.find("markers_found=3") != std::string::npos);
}

TEST_CASE("suggest output is deterministic and flags repeats") {
    TempDir d;
    CHECK(run_cli({"--data-dir", d.str(), "suggest", "--target", "1,2,3"}).code == cli::kModel);
    seed(d.str());
    const auto a = run_cli({"--data-dir", d.str(), "suggest", "--target", "120,110,50"});
    const auto b = run_cli({"--data-dir", d.str(), "suggest", "--target", "120,110,50"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("trained on 7 records") != std::string::npos);
    // A recorded color as the target: the optimum lands on that recipe.
    const auto rep = run_cli({"--data-dir", d.str(), "--fixed-hyper", "suggest", "--target", "200,100,50"});
    CHECK(rep.out.find("[repeat: already tested]") != std::string::npos);
    const auto csv = run_cli({"--data-dir", d.str(), "--format", "csv", "suggest", "--target", "120,110,50"});
    CHECK(csv.out.rfind("kind,red,yellow,blue,green", 0) == 0);
    CHECK(run_cli({"--data-dir", d.str(), "suggest", "--target", "1,2,3", "--contributor", "nobody"}).code == cli::kModel);
}

TEST_CASE("local and service suggestions are identical") {
    TempDir d;
    seed(d.str());
    Store store = Store::open(d.str());
    Service svc(store);
    const int port = svc.bind("127.0.0.1", 0);
    std::thread t([&] { svc.run(); });
    for (int i = 0; i < 200 && !svc.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const std::string url = "http://127.0.0.1:" + std::to_string(port);
    for (const char* fmt : {"text", "json", "csv"}) {
        const auto local = run_cli({"--data-dir", d.str(), "--format", fmt, "suggest", "--target", "90,150,60"});
        const auto remote = run_cli({"--url", url, "--format", fmt, "suggest", "--target", "90,150,60"});
        CHECK(remote.code == 0);
        CHECK(local.out == remote.out);
    }
    CHECK(run_cli({"--url", url, "records"}).out == run_cli({"--data-dir", d.str(), "records"}).out);
    CHECK(run_cli({"--url", url, "export"}).out == run_cli({"--data-dir", d.str(), "export"}).out);
    CHECK(run_cli({"--url", url, "suggest", "--target", "1,1,1", "--campaign", "none"}).code == cli::kModel);
    svc.stop();
    t.join();
    CHECK(run_cli({"--url", url, "records"}).code == cli::kStorage);
}

TEST_CASE("simulate") {
    CHECK(run_cli({"--no-noise", "simulate", "--recipe", "0,0,0,0"}).out == "200.00 200.00 200.00\n");
    const auto a = run_cli({"--seed", "5", "simulate", "--recipe", "3,3,3,3", "--repeat", "3"});
    CHECK(a.out == run_cli({"--seed", "5", "simulate", "--recipe", "3,3,3,3", "--repeat", "3"}).out);
    CHECK(a.out != run_cli({"--seed", "6", "simulate", "--recipe", "3,3,3,3", "--repeat", "3"}).out);
    CHECK(run_cli({"simulate", "--recipe", "-1,0,0,0"}).code == cli::kUsage);
}

TEST_CASE("campaign csv has 7 + k rows per agent") {
    TempDir d;
    const auto r = run_cli({"--format", "csv", "--fixed-hyper", "campaign", "--mode", "collab", "--iterations", "2",
                        "--csv", d.str("c.csv")});
    REQUIRE(r.code == 0);
    const auto lines = std::count(r.out.begin(), r.out.end(), '\n');
    CHECK(lines == 1 + 4 * (7 + 2));
    CHECK(r.out.find("Scientist 4") != std::string::npos);
    CHECK(fs::file_size(d.str("c.csv")) == r.out.size());
    const auto text = run_cli({"--fixed-hyper", "campaign", "--mode", "both", "--iterations", "1"});
    CHECK(text.out.find("final delta") != std::string::npos);
    CHECK(run_cli({"campaign", "--mode", "collab", "--target", "1,2,3"}).code == cli::kUsage);
}

TEST_CASE("export and import through the CLI") {
    TempDir d;
    seed(d.str("a"));
    REQUIRE(run_cli({"--data-dir", d.str("a"), "export", "--out", d.str("x.csv")}).code == 0);
    CHECK(run_cli({"--data-dir", d.str("b"), "import", d.str("x.csv")}).out == "imported 7 records\n");
    CHECK(run_cli({"--data-dir", d.str("b"), "export"}).out == run_cli({"--data-dir", d.str("a"), "export"}).out);
    CHECK(run_cli({"--data-dir", d.str("b"), "import", d.str("x.csv")}).code == cli::kUsage);
}

TEST_CASE("serve rejects a bad port") {
    TempDir d;
    CHECK(run_cli({"--data-dir", d.str(), "serve", "--port", "99999"}).code == cli::kUsage);
}
