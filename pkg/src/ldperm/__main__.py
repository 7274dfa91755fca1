from ldperm.cli import main

raise SystemExit(main())
