from tsdelay.cli import main

main()
