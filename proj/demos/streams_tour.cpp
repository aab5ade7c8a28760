// Creates four streams from the default seed, prints their state matrix,
// then fills a length-8 uniform vector on a 2 x 2 work grid.

#include <cstdio>

#include <streamforge/streamforge.hpp>

int main()
{
  using namespace streamforge;

  StreamSet streams = create_streams(4);
  std::printf("%s", to_string(streams).c_str());

  FillRequest req;
  req.shape = Shape::vector(8);
  req.grid = WorkGrid{2, 2};
  const MatrixBuffer<double> sim = fill_uniform(streams, req);

  std::printf("sim_1:");
  for (std::size_t c = 0; c < sim.ncol; ++c)
    std::printf(" %.3f", sim(0, c));
  std::printf("\n");
  return 0;
}
