from qfldp.cli import main

raise SystemExit(main())
