// Writes the fixture meshes as OBJ + part-annotation JSON pairs.

#include <filesystem>
#include <iostream>

#include "graspkit/fixtures.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/fixtures";
  std::filesystem::create_directories(dir);
  auto meshes = graspkit::desk_fixtures();
  meshes.emplace_back("clock", graspkit::clock_fixture());
  meshes.emplace_back("cube", graspkit::unit_cube_fixture());
  for (const auto& [name, mesh] : meshes) {
    graspkit::save_mesh(mesh, dir / (name + ".obj"), dir / (name + ".parts.json"));
    std::cout << (dir / (name + ".obj")).string() << '\n';
  }
  return 0;
}
