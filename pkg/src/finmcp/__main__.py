from finmcp.cli import main

raise SystemExit(main())
