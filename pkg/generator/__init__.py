# generator package
