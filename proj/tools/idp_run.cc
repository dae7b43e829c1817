#include <idp/driver.h>

int main(int argc, char **argv)
{
  return idp::main_entry(argc, argv);
}
