#include "femlet/error.hpp"
#include "femlet/problem.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

void print_status(const femlet::ProblemSolution& solution)
{
    for (const auto& block : solution.blocks) {
        std::string names;
        for (const auto& n : block.equations) {
            names += (names.empty() ? "" : ", ") + n;
        }
        std::printf("block [%s]\n", names.c_str());
        std::printf("  nls: iter: 0, residual: %e\n", block.status.initial_residual);
        for (std::size_t i = 0; i < block.status.history.size(); ++i) {
            const auto& it = block.status.history[i];
            std::printf("  nls: iter: %zu, residual: %e (step %g)\n", i + 1, it.residual_after, it.step_length);
        }
        std::printf("  nls: %s\n", block.status.converged ? "converged" : "not converged");
    }
}

int run_solve(const std::string& file, std::string output, bool save_regions)
{
    femlet::ProblemDefinition pb = femlet::load_problem_file(file);
    const std::filesystem::path stem = std::filesystem::path(file).stem();
    if (output.empty()) {
        output = pb.output_path.empty() ? stem.string() + ".vtk" : pb.output_path;
    }
    const femlet::ProblemSolution solution = pb.solve();
    print_status(solution);
    femlet::write_vtk(pb.mesh(), solution.outputs, output);
    std::printf("output: %s\n", output.c_str());
    if (save_regions) {
        const std::filesystem::path out(output);
        const std::string regions_path = (out.parent_path() / (out.stem().string() + "_regions.vtk")).string();
        femlet::save_regions_as_groups(pb.regions(), regions_path);
        std::printf("regions: %s\n", regions_path.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"femlet: finite element solver for description files"};
    app.require_subcommand(1);

    std::string file;
    std::string output;
    bool save_regions = false;
    CLI::App* solve = app.add_subcommand("solve", "Solve a problem description and write VTK output");
    solve->add_option("file", file, "Problem description (JSON)")->required();
    solve->add_option("-o,--output", output, "Output VTK path");
    solve->add_flag("--save-regions", save_regions, "Also write regions as 0/1 point groups");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        return run_solve(file, output, save_regions);
    } catch (const femlet::SingularMatrixError& e) {
        std::cerr << "femlet: solver error: " << e.what() << '\n';
        return 2;
    } catch (const femlet::IndefiniteMatrixError& e) {
        std::cerr << "femlet: solver error: " << e.what() << '\n';
        return 2;
    } catch (const femlet::SolverError& e) {
        std::cerr << "femlet: solver error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "femlet: error: " << e.what() << '\n';
        return 1;
    }
}
