from qdialogue.cli import main

raise SystemExit(main())
