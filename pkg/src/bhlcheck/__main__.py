from bhlcheck.cli import main

raise SystemExit(main())
