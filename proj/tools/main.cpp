#include "xwalk/cli/commands.hpp"

int main(int argc, char ** argv)
{
  return xwalk::cli::run(argc, argv);
}
