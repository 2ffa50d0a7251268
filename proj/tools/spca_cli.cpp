#include "cli_app.hpp"

int main(int argc, char** argv)
{
    return spca::cli::run(argc, argv);
}
