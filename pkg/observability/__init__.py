# observability package

